//! Finite-difference operators on the cell-centred grid.
//!
//! Interior derivatives are second-order central differences. Boundary
//! cells read ghost values from the attached [`ComponentBc`]: mirror for
//! Neumann, linear extrapolation through the face value for Dirichlet.
//! Dirichlet gradients in boundary cells use a one-sided closure through
//! the face value instead, since the ghost rule is only first order there.
//! Derived quantities without a boundary condition of their own (stress
//! tensors, `|grad d|^2`) are differentiated with second-order one-sided
//! stencils at the boundary.

use crate::error::{Error, Result};
use crate::field::{
    check_grids, BoundarySpec, ComponentBc, DirectorField, ScalarField, VectorField,
};
use crate::grid::Grid;
use crate::penalty::Penalty;
use crate::scalar::Real;

/// Visits every cell as `(flat index, multi-index)` in storage order.
#[inline]
pub(crate) fn for_each_cell<T: Real>(grid: &Grid<T>, mut f: impl FnMut(usize, [usize; 3])) {
    let [nx, ny, nz] = grid.counts();
    let mut idx = 0;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                f(idx, [i, j, k]);
                idx += 1;
            }
        }
    }
}

/// Neighbour values `(lower, upper)` of cell `idx` along `axis`.
#[inline]
fn neighbours<T: Real>(
    grid: &Grid<T>,
    data: &[T],
    bc: ComponentBc<'_, T>,
    axis: usize,
    idx: usize,
    m: [usize; 3],
) -> (T, T) {
    let s = grid.stride(axis);
    let v = data[idx];
    let lo = if m[axis] == 0 {
        bc.ghost(axis, 0, m, v)
    } else {
        data[idx - s]
    };
    let hi = if m[axis] + 1 == grid.count(axis) {
        bc.ghost(axis, 1, m, v)
    } else {
        data[idx + s]
    };
    (lo, hi)
}

/// Derivative (times `h`) at a boundary cell centre from the face value at
/// `-h/2` and the cells at `0` and `2h`. The leading error matches the
/// central difference (`h^2 f''' / 6`), so the gradient error stays smooth
/// up to the boundary.
#[inline]
fn boundary_slope<T: Real>(face: T, c0: T, c2: T) -> T {
    (T::lit(-8.0) * face) / T::lit(5.0) + c0 * T::lit(1.5) + c2 / T::lit(10.0)
}

/// Second derivative (times `h^2`) of the cubic through the face value at
/// `-h/2` and the cells at `0`, `h` and `2h`.
#[inline]
fn boundary_curvature<T: Real>(face: T, c0: T, c1: T, c2: T) -> T {
    (T::lit(16.0) * face) / T::lit(5.0) - T::lit(5.0) * c0 + T::lit(2.0) * c1 - c2 / T::lit(5.0)
}

pub(crate) fn grad_component<T: Real>(
    grid: &Grid<T>,
    data: &[T],
    bc: ComponentBc<'_, T>,
) -> Vec<Vec<T>> {
    let mut out = vec![vec![T::zero(); data.len()]; grid.dim()];
    for (axis, out_a) in out.iter_mut().enumerate() {
        let h = grid.spacing(axis);
        let inv = T::one() / (T::lit(2.0) * h);
        let (s, n) = (grid.stride(axis), grid.count(axis));
        // the ghost rule is only first order in boundary cells; use the
        // face value and two inner cells instead
        let one_sided = bc.is_dirichlet() && n >= 3;
        for_each_cell(grid, |idx, m| {
            let v = data[idx];
            out_a[idx] = if one_sided && m[axis] == 0 {
                boundary_slope(bc.face_value(axis, 0, m, v), v, data[idx + 2 * s]) / h
            } else if one_sided && m[axis] + 1 == n {
                -boundary_slope(bc.face_value(axis, 1, m, v), v, data[idx - 2 * s]) / h
            } else {
                let (lo, hi) = neighbours(grid, data, bc, axis, idx, m);
                (hi - lo) * inv
            };
        });
    }
    out
}

pub(crate) fn laplacian_component<T: Real>(
    grid: &Grid<T>,
    data: &[T],
    bc: ComponentBc<'_, T>,
) -> Vec<T> {
    let mut out = vec![T::zero(); data.len()];
    let two = T::lit(2.0);
    for axis in 0..grid.dim() {
        let h = grid.spacing(axis);
        let inv = T::one() / (h * h);
        let s = grid.stride(axis);
        let n = grid.count(axis);
        // interior cells by slices, boundary layers through the ghost rule
        let block = s * n;
        for base in (0..data.len()).step_by(block) {
            let src = &data[base..base + block];
            let dst = &mut out[base..base + block];
            if s == 1 {
                for i in 1..n.saturating_sub(1) {
                    dst[i] = dst[i] + (src[i - 1] - two * src[i] + src[i + 1]) * inv;
                }
            } else {
                for p in 1..n.saturating_sub(1) {
                    let (a, rest) = src[(p - 1) * s..].split_at(s);
                    let (c, e) = rest.split_at(s);
                    for (((o, &x), &y), &z) in
                        dst[p * s..(p + 1) * s].iter_mut().zip(a).zip(c).zip(e)
                    {
                        *o = *o + (x - two * y + z) * inv;
                    }
                }
            }
            for p in [0, n - 1] {
                for r in 0..s {
                    let idx = base + p * s + r;
                    let m = grid.multi_index(idx);
                    let (lo, hi) = neighbours(grid, data, bc, axis, idx, m);
                    out[idx] = out[idx] + (lo - two * data[idx] + hi) * inv;
                }
                if n == 1 {
                    break;
                }
            }
        }
    }
    out
}

/// First-order upwind `u . grad q`. Towards a Dirichlet face the difference
/// uses the face value half a cell away.
pub(crate) fn upwind_component<T: Real>(
    grid: &Grid<T>,
    data: &[T],
    bc: ComponentBc<'_, T>,
    u: &VectorField<T>,
) -> Vec<T> {
    let mut out = vec![T::zero(); data.len()];
    for axis in 0..grid.dim() {
        let h = grid.spacing(axis);
        let half = h * T::lit(0.5);
        let s = grid.stride(axis);
        let ua = u.component(axis);
        let n = grid.count(axis);
        for_each_cell(grid, |idx, m| {
            let w = ua[idx];
            let v = data[idx];
            let slope = if w > T::zero() {
                if m[axis] == 0 {
                    if bc.is_dirichlet() {
                        (v - bc.face_value(axis, 0, m, v)) / half
                    } else {
                        T::zero()
                    }
                } else {
                    (v - data[idx - s]) / h
                }
            } else if w < T::zero() {
                if m[axis] + 1 == n {
                    if bc.is_dirichlet() {
                        (bc.face_value(axis, 1, m, v) - v) / half
                    } else {
                        T::zero()
                    }
                } else {
                    (data[idx + s] - v) / h
                }
            } else {
                T::zero()
            };
            out[idx] = out[idx] + w * slope;
        });
    }
    out
}

/// Derivative along `axis`: central inside, second-order one-sided on the
/// first and last cell.
pub(crate) fn extrapolated_derivative<T: Real>(grid: &Grid<T>, data: &[T], axis: usize) -> Vec<T> {
    let h = grid.spacing(axis);
    let s = grid.stride(axis);
    let n = grid.count(axis);
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let mut out = vec![T::zero(); data.len()];
    for_each_cell(grid, |idx, m| {
        out[idx] = if m[axis] == 0 {
            (-three * data[idx] + four * data[idx + s] - data[idx + 2 * s]) / (two * h)
        } else if m[axis] + 1 == n {
            (three * data[idx] - four * data[idx - s] + data[idx - 2 * s]) / (two * h)
        } else {
            (data[idx + s] - data[idx - s]) / (two * h)
        };
    });
    out
}

/// Gradient of a scalar field.
pub fn gradient<T: Real>(s: &ScalarField<T>, bc: &BoundarySpec<T>) -> VectorField<T> {
    let comps = grad_component(s.grid(), s.values(), bc.component(0));
    VectorField::from_components(s.grid(), comps).expect("shape preserved")
}

/// Gradient of every director component: entry `k` holds `grad d_k`.
pub fn director_gradient<T: Real>(
    d: &DirectorField<T>,
    bc: &BoundarySpec<T>,
) -> [VectorField<T>; 3] {
    let g = d.grid();
    let make = |k: usize| {
        VectorField::from_components(g, grad_component(g, d.component(k), bc.component(k)))
            .expect("shape preserved")
    };
    [make(0), make(1), make(2)]
}

/// Divergence with one-sided differences at the boundary (exact on
/// quadratic fields).
pub fn divergence<T: Real>(v: &VectorField<T>) -> ScalarField<T> {
    let g = v.grid();
    let mut out = vec![T::zero(); g.cell_count()];
    for axis in 0..g.dim() {
        let da = extrapolated_derivative(g, v.component(axis), axis);
        for (o, d) in out.iter_mut().zip(da) {
            *o = *o + d;
        }
    }
    ScalarField::from_vec(g, out).expect("shape preserved")
}

/// Divergence using the ghost values of `bc` (central everywhere).
pub fn divergence_bc<T: Real>(v: &VectorField<T>, bc: &BoundarySpec<T>) -> ScalarField<T> {
    let g = v.grid();
    let mut out = vec![T::zero(); g.cell_count()];
    for axis in 0..g.dim() {
        let inv = T::one() / (T::lit(2.0) * g.spacing(axis));
        let data = v.component(axis);
        let cbc = bc.component(axis);
        for_each_cell(g, |idx, m| {
            let (lo, hi) = neighbours(g, data, cbc, axis, idx, m);
            out[idx] = out[idx] + (hi - lo) * inv;
        });
    }
    ScalarField::from_vec(g, out).expect("shape preserved")
}

pub fn laplacian<T: Real>(s: &ScalarField<T>, bc: &BoundarySpec<T>) -> ScalarField<T> {
    let out = laplacian_component(s.grid(), s.values(), bc.component(0));
    ScalarField::from_vec(s.grid(), out).expect("shape preserved")
}

pub fn vector_laplacian<T: Real>(v: &VectorField<T>, bc: &BoundarySpec<T>) -> VectorField<T> {
    let g = v.grid();
    let comps = (0..v.dim())
        .map(|c| laplacian_component(g, v.component(c), bc.component(c)))
        .collect();
    VectorField::from_components(g, comps).expect("shape preserved")
}

pub fn director_laplacian<T: Real>(d: &DirectorField<T>, bc: &BoundarySpec<T>) -> DirectorField<T> {
    let g = d.grid();
    let lap = |k: usize| laplacian_component(g, d.component(k), bc.component(k));
    DirectorField::from_components(g, [lap(0), lap(1), lap(2)]).expect("shape preserved")
}

/// Laplacian whose boundary cells use the cubic closure of the gradient
/// instead of the ghost rule. Consistent in every cell but not symmetric, so
/// it only serves diagnostics.
fn consistent_laplacian_component<T: Real>(
    grid: &Grid<T>,
    data: &[T],
    bc: ComponentBc<'_, T>,
) -> Vec<T> {
    let mut out = laplacian_component(grid, data, bc);
    if !bc.is_dirichlet() {
        return out;
    }
    for axis in 0..grid.dim() {
        let (s, n) = (grid.stride(axis), grid.count(axis));
        if n < 3 {
            continue;
        }
        let h = grid.spacing(axis);
        let inv = T::one() / (h * h);
        for_each_cell(grid, |idx, m| {
            let v = data[idx];
            let (side, inner) = match m[axis] {
                0 => (0, [data[idx + s], data[idx + 2 * s]]),
                i if i + 1 == n => (1, [data[idx - s], data[idx - 2 * s]]),
                _ => return,
            };
            let face = bc.face_value(axis, side, m, v);
            let ghost_rule = (bc.ghost(axis, side, m, v) - T::lit(2.0) * v + inner[0]) * inv;
            out[idx] =
                out[idx] - ghost_rule + boundary_curvature(face, v, inner[0], inner[1]) * inv;
        });
    }
    out
}

/// Upwind `u . grad s`.
pub fn advect<T: Real>(
    s: &ScalarField<T>,
    bc: &BoundarySpec<T>,
    u: &VectorField<T>,
) -> Result<ScalarField<T>> {
    check_grids(s.grid(), u.grid())?;
    let out = upwind_component(s.grid(), s.values(), bc.component(0), u);
    ScalarField::from_vec(s.grid(), out)
}

/// Upwind `u . grad d`, componentwise.
pub fn advect_director<T: Real>(
    d: &DirectorField<T>,
    bc: &BoundarySpec<T>,
    u: &VectorField<T>,
) -> Result<DirectorField<T>> {
    check_grids(d.grid(), u.grid())?;
    let g = d.grid();
    let adv = |k: usize| upwind_component(g, d.component(k), bc.component(k), u);
    DirectorField::from_components(g, [adv(0), adv(1), adv(2)])
}

/// Cellwise `grad d (.) grad d = (grad d)^T grad d` restricted to the
/// spatial `dim x dim` block, stored as `[i][j][cell]`.
pub fn gradient_product<T: Real>(grad: &[VectorField<T>; 3]) -> Vec<Vec<Vec<T>>> {
    let g = grad[0].grid();
    let dim = g.dim();
    let n = g.cell_count();
    let mut out = vec![vec![vec![T::zero(); n]; dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let mut entry = vec![T::zero(); n];
            for gk in grad.iter() {
                let (a, b) = (gk.component(i), gk.component(j));
                for (e, (&x, &y)) in entry.iter_mut().zip(a.iter().zip(b)) {
                    *e = *e + x * y;
                }
            }
            if i != j {
                out[j][i] = entry.clone();
            }
            out[i][j] = entry;
        }
    }
    out
}

/// Row-wise divergence `(div S)_j = sum_i d_i S_ij` of a `dim x dim`
/// tensor field.
fn tensor_divergence<T: Real>(grid: &Grid<T>, tensor: &[Vec<Vec<T>>]) -> VectorField<T> {
    let dim = grid.dim();
    let mut comps = vec![vec![T::zero(); grid.cell_count()]; dim];
    for (j, comp) in comps.iter_mut().enumerate() {
        for (i, row) in tensor.iter().enumerate() {
            let d = extrapolated_derivative(grid, &row[j], i);
            for (c, v) in comp.iter_mut().zip(d) {
                *c = *c + v;
            }
        }
    }
    VectorField::from_components(grid, comps).expect("shape preserved")
}

/// `div(grad d (.) grad d - (|grad d|^2 / 2 + F(d)) I)` obtained by
/// assembling the stress tensor at every cell and differentiating it.
pub fn ericksen_stress_divergence<T: Real, P: Penalty<T> + ?Sized>(
    d: &DirectorField<T>,
    bc: &BoundarySpec<T>,
    penalty: &P,
) -> VectorField<T> {
    let g = d.grid();
    let grad = director_gradient(d, bc);
    let mut stress = gradient_product(&grad);
    let dim = g.dim();
    for idx in 0..g.cell_count() {
        let mut grad_sq = T::zero();
        for i in 0..dim {
            grad_sq = grad_sq + stress[i][i][idx];
        }
        let iso = grad_sq * T::lit(0.5) + penalty.energy(d.at(idx));
        for (i, row) in stress.iter_mut().enumerate() {
            row[i][idx] = row[i][idx] - iso;
        }
    }
    tensor_divergence(g, &stress)
}

/// `(grad d)^T (Delta d - f(d))`: the stress divergence rewritten through
/// the product rule. Vanishes wherever `Delta d = f(d)` holds discretely.
pub fn ericksen_force<T: Real, P: Penalty<T> + ?Sized>(
    d: &DirectorField<T>,
    bc: &BoundarySpec<T>,
    penalty: &P,
) -> VectorField<T> {
    let g = d.grid();
    let grad = director_gradient(d, bc);
    let lap = director_laplacian(d, bc);
    let mut comps = vec![vec![T::zero(); g.cell_count()]; g.dim()];
    for idx in 0..g.cell_count() {
        let f = penalty.force(d.at(idx));
        let mut r = [T::zero(); 3];
        for k in 0..3 {
            r[k] = lap.component(k)[idx] - f[k];
        }
        for (j, comp) in comps.iter_mut().enumerate() {
            comp[idx] = (0..3).map(|k| grad[k].component(j)[idx] * r[k]).sum();
        }
    }
    VectorField::from_components(g, comps).expect("shape preserved")
}

/// Defect of the product rule
/// `div(grad d (.) grad d) - grad(|grad d|^2 / 2) - (grad d)^T Delta d`.
pub fn stress_identity_defect<T: Real>(
    d: &DirectorField<T>,
    bc: &BoundarySpec<T>,
) -> VectorField<T> {
    let g = d.grid();
    let dim = g.dim();
    let grad = director_gradient(d, bc);
    let product = gradient_product(&grad);
    let div = tensor_divergence(g, &product);
    let lap: Vec<Vec<T>> = (0..3)
        .map(|k| consistent_laplacian_component(g, d.component(k), bc.component(k)))
        .collect();
    let half_sq: Vec<T> = (0..g.cell_count())
        .map(|idx| (0..dim).map(|i| product[i][i][idx]).sum::<T>() * T::lit(0.5))
        .collect();
    let mut comps = Vec::with_capacity(dim);
    for j in 0..dim {
        let dj = extrapolated_derivative(g, &half_sq, j);
        let comp: Vec<T> = (0..g.cell_count())
            .map(|idx| {
                let transport: T = (0..3)
                    .map(|k| grad[k].component(j)[idx] * lap[k][idx])
                    .sum();
                div.component(j)[idx] - dj[idx] - transport
            })
            .collect();
        comps.push(comp);
    }
    VectorField::from_components(g, comps).expect("shape preserved")
}

/// `(sum |s|^p dV)^(1/p)` with midpoint quadrature.
pub fn lp_norm<T: Real>(s: &ScalarField<T>, p: T) -> Result<T> {
    lp_norm_values(s.grid(), s.values(), p)
}

pub(crate) fn lp_norm_values<T: Real>(grid: &Grid<T>, values: &[T], p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(Error::InvalidArgument(format!(
            "p must be at least 1, got {p}"
        )));
    }
    let vol = grid.cell_volume();
    if p == T::one() {
        return Ok(values.iter().map(|v| v.abs()).sum::<T>() * vol);
    }
    if p == T::lit(2.0) {
        return Ok((values.iter().map(|&v| v * v).sum::<T>() * vol).sqrt());
    }
    let sum: T = values.iter().map(|v| v.abs().powf(p)).sum();
    Ok((sum * vol).powf(T::one() / p))
}

/// `L^2` norm of a vector field, `(sum |v|^2 dV)^(1/2)`.
pub fn l2_norm_vector<T: Real>(v: &VectorField<T>) -> T {
    let sum: T = v.components().iter().flatten().map(|&x| x * x).sum();
    (sum * v.grid().cell_volume()).sqrt()
}

/// `L^2` norm of a director field.
pub fn l2_norm_director<T: Real>(d: &DirectorField<T>) -> T {
    let sum: T = d.components().iter().flatten().map(|&x| x * x).sum();
    (sum * d.grid().cell_volume()).sqrt()
}

/// Squared face-difference `H^1` seminorm of one component.
///
/// Interior faces contribute `((q_R - q_L) / h)^2`; a Dirichlet boundary face
/// contributes the half-cell difference to its face value over half a cell
/// volume. This is the quadratic form whose gradient is `-Delta_h` with the
/// ghost rules of [`laplacian`], so it is the energy the implicit director
/// step dissipates exactly.
pub(crate) fn face_seminorm_sq<T: Real>(grid: &Grid<T>, data: &[T], bc: ComponentBc<'_, T>) -> T {
    let vol = grid.cell_volume();
    let mut total = T::zero();
    for axis in 0..grid.dim() {
        let h = grid.spacing(axis);
        let inv = T::one() / (h * h);
        let s = grid.stride(axis);
        let n = grid.count(axis);
        let mut acc = T::zero();
        for_each_cell(grid, |idx, m| {
            let v = data[idx];
            if m[axis] + 1 < n {
                let dq = data[idx + s] - v;
                acc = acc + dq * dq;
            }
            if bc.is_dirichlet() {
                if m[axis] == 0 {
                    let dq = v - bc.face_value(axis, 0, m, v);
                    acc = acc + T::lit(2.0) * dq * dq;
                }
                if m[axis] + 1 == n {
                    let dq = bc.face_value(axis, 1, m, v) - v;
                    acc = acc + T::lit(2.0) * dq * dq;
                }
            }
        });
        total = total + acc * inv;
    }
    total * vol
}

/// `H^1` seminorm `||grad d||_{L^2}` of a director field, measured with face
/// differences against the boundary data of `bc`.
pub fn h1_seminorm<T: Real>(d: &DirectorField<T>, bc: &BoundarySpec<T>) -> T {
    (0..3)
        .map(|k| face_seminorm_sq(d.grid(), d.component(k), bc.component(k)))
        .sum::<T>()
        .sqrt()
}
