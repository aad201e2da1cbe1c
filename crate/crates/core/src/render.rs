//! Static field displays: binary PPM heatmaps and subsampled velocity arrows.

use crate::error::SolverError;
use crate::grid::{gradient_central, BoundarySpec, Quantity, ScalarField};
use crate::io::fmt15;
use crate::model::ModelParams;
use crate::viridis::VIRIDIS;

/// Colormap index for `v`, linear on `[min, max]` and clamped. NaN maps to 0.
pub fn color_index(v: f64, min: f64, max: f64) -> usize {
    let t = if max > min {
        (v - min) / (max - min)
    } else {
        0.0
    };
    if t.is_nan() {
        return 0;
    }
    (t.clamp(0.0, 1.0) * 255.0).round() as usize
}

/// P6 pixmap, one pixel per cell, top row = largest y.
pub fn heatmap_ppm(field: &ScalarField, min: f64, max: f64) -> Vec<u8> {
    let g = field.grid;
    let mut out = format!("P6\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    out.reserve(3 * g.len());
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            out.extend_from_slice(&VIRIDIS[color_index(field.at(i, j), min, max)]);
        }
    }
    out
}

/// CSV `x,y,u,v` of the feedback velocity `−f^β(ρ)∇φ` at every `every`-th
/// cell center in each direction.
pub fn arrow_csv(
    rho: &ScalarField,
    phi: &ScalarField,
    params: &ModelParams,
    potential_spec: &BoundarySpec,
    every: usize,
) -> Result<String, SolverError> {
    if every == 0 {
        return Err(SolverError::Invalid(
            "arrow subsampling must be >= 1".into(),
        ));
    }
    rho.same_grid(phi)?;
    let g = rho.grid;
    let grad = gradient_central(phi, potential_spec, Quantity::Potential)?;
    let mut s = String::from("x,y,u,v\n");
    for j in (every / 2..g.ny).step_by(every) {
        for i in (every / 2..g.nx).step_by(every) {
            let k = g.idx(i, j);
            let (x, y) = g.center(i, j);
            let u = params.optimal_velocity(rho.values[k], grad.at(k));
            s.push_str(&format!(
                "{},{},{},{}\n",
                fmt15(x),
                fmt15(y),
                fmt15(u[0]),
                fmt15(u[1])
            ));
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;

    #[test]
    fn ppm_layout_and_scaling() {
        let g = Grid2D::new(4, 4, 4.0, 4.0).unwrap();
        let mut v = vec![0.0; 16];
        v[12..16].copy_from_slice(&[2.0, -1.0, 0.0, 0.5]);
        let mut f = ScalarField::from_values(g, v).unwrap();
        f.values[14] = f64::NAN;
        let img = heatmap_ppm(&f, 0.0, 1.0);
        let header = b"P6\n4 4\n255\n";
        assert_eq!(&img[..header.len()], header);
        let px = &img[header.len()..];
        assert_eq!(px.len(), 48);
        // Top row holds j = 3: clamped high, clamped low, NaN, midpoint.
        assert_eq!(&px[0..3], &VIRIDIS[255]);
        assert_eq!(&px[3..6], &VIRIDIS[0]);
        assert_eq!(&px[6..9], &VIRIDIS[0]);
        assert_eq!(&px[9..12], &VIRIDIS[128]);
    }

    #[test]
    fn arrows_follow_the_potential() {
        let g = Grid2D::new(8, 4, 4.0, 2.0).unwrap();
        let params = ModelParams::new(1.0, 1.0, 0.0).unwrap();
        let rho = ScalarField::constant(g, 0.25);
        let phi = ScalarField::from_fn(g, |x, _| 4.0 - x);
        let spec = crate::coupling::corridor_boundaries(crate::grid::EdgeCondition::Wall).potential;
        let csv = arrow_csv(&rho, &phi, &params, &spec, 2).unwrap();
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 8);
        for r in rows {
            let v: Vec<f64> = r.split(',').map(|s| s.parse().unwrap()).collect();
            assert!((v[2] - 0.75).abs() < 1e-12 && v[3].abs() < 1e-12, "{r}");
        }
    }
}
