use std::path::PathBuf;

use clap::{Parser, Subcommand};
use fpm_meshgen::shapes::{self, NotchedDisc, UNotchPlate};

#[derive(Parser)]
#[command(version, about = "Writes specimen meshes in the fpmmesh format")]
struct Args {
    /// Output file.
    #[arg(short, long)]
    output: PathBuf,
    #[command(subcommand)]
    shape: Shape,
}

#[derive(Subcommand)]
enum Shape {
    /// Structured or jittered rectangle.
    Rect {
        #[arg(long, default_value_t = 1.0)]
        width: f64,
        #[arg(long, default_value_t = 1.0)]
        height: f64,
        #[arg(long, default_value_t = 4)]
        nx: usize,
        #[arg(long, default_value_t = 4)]
        ny: usize,
        /// Jitter and split into triangles with this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Adds edge set "interface" of the interior edges on this line y = const.
        #[arg(long)]
        interface_y: Option<f64>,
    },
    /// Quarter plate with a circular hole.
    PlateHole {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 10.0)]
        half_size: f64,
        #[arg(long, default_value_t = 48)]
        n_theta: usize,
        #[arg(long, default_value_t = 30)]
        n_r: usize,
        #[arg(long, default_value_t = 0.03)]
        first_layer: f64,
    },
    /// Double-edge U-notched tension specimen (left half).
    UNotch {
        /// Root radius; all other lengths scale with it.
        #[arg(long, default_value_t = 0.002)]
        radius: f64,
        /// Jitter and split into triangles with this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Disc with a central slot rotated by `beta` degrees.
    Disc {
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
    },
}

fn main() {
    let args = Args::parse();
    let (mesh, what) = match args.shape {
        Shape::Rect { width, height, nx, ny, seed, interface_y } => {
            let (mut m, what) = match seed {
                None => (shapes::rectangle([0.0, 0.0], width, height, nx, ny), "rectangle".to_string()),
                Some(s) => (
                    shapes::unstructured_rectangle([0.0, 0.0], width, height, nx, ny, s),
                    format!("jittered rectangle, seed {s}"),
                ),
            };
            if let Some(y) = interface_y {
                let tol = 1e-9 * height;
                m.edge_set_where("interface", true, |a, b| {
                    (a[1] - y).abs() < tol && (b[1] - y).abs() < tol
                });
            }
            (m, what)
        }
        Shape::PlateHole { radius, half_size, n_theta, n_r, first_layer } => (
            shapes::plate_with_hole(radius, half_size, n_theta, n_r, first_layer),
            "quarter plate with hole".to_string(),
        ),
        Shape::UNotch { radius, seed } => {
            let g = UNotchPlate::with_radius(radius);
            match seed {
                None => (g.structured(), format!("U-notched plate, R = {radius}")),
                Some(s) => (
                    g.unstructured(s),
                    format!("U-notched plate, R = {radius}, unstructured, seed {s}"),
                ),
            }
        }
        Shape::Disc { beta } => (
            NotchedDisc { beta_deg: beta, ..NotchedDisc::default() }.mesh(),
            format!("slotted disc, beta {beta} deg"),
        ),
    };
    let text = mesh.to_fpmmesh(&format!("{what}\n{} cells", mesh.cells.len()));
    if let Err(e) = std::fs::write(&args.output, text) {
        eprintln!("error: {}: {e}", args.output.display());
        std::process::exit(5);
    }
}
