use super::Field;
use crate::error::Result;

/// `∫_Ω v`, summed in cell order.
pub fn integrate(v: &Field) -> f64 {
    v.grid().cell_volume() * v.values().iter().sum::<f64>()
}

/// `∫_Γ v` with the boundary cell value as trace.
pub fn boundary_integrate(v: &Field) -> f64 {
    let g = v.grid();
    v.values().iter().enumerate().map(|(i, x)| g.boundary_area(i) * x).sum()
}

/// Cell-volume weighted inner product.
pub fn inner(v: &Field, w: &Field) -> Result<f64> {
    v.same_grid(w)?;
    Ok(v.grid().cell_volume() * v.values().iter().zip(w.values()).map(|(a, b)| a * b).sum::<f64>())
}

pub fn l1_norm(v: &Field) -> f64 {
    v.grid().cell_volume() * v.values().iter().map(|x| x.abs()).sum::<f64>()
}

pub fn l2_norm(v: &Field) -> f64 {
    (v.grid().cell_volume() * v.values().iter().map(|x| x * x).sum::<f64>()).sqrt()
}

pub fn linf_norm(v: &Field) -> f64 {
    v.values().iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `(Σ_faces |face| / h (v_i - v_j)²)^{1/2}`; equals `⟨A v, v⟩^{1/2}`.
pub fn h1_seminorm(v: &Field) -> f64 {
    (integrate(&gradient_sq_density(v))).sqrt()
}

/// Cell-wise `|∇v|²` density: half the squared face differences of each
/// cell, so that its integral is the squared H¹ seminorm.
pub fn gradient_sq_density(v: &Field) -> Field {
    let g = *v.grid();
    let x = v.values();
    let n = g.cells_per_axis();
    let strides = g.strides();
    let mut out = vec![0.0; x.len()];
    for axis in 0..g.dim() {
        let h = g.spacing()[axis];
        let s = strides[axis];
        for idx in 0..x.len() {
            if g.coords(idx)[axis] + 1 < n[axis] {
                let d = (x[idx + s] - x[idx]) / h;
                let half = 0.5 * d * d;
                out[idx] += half;
                out[idx + s] += half;
            }
        }
    }
    Field::from_raw(g, out)
}
