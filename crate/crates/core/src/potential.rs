//! Reduced Lennard-Jones pair potential `v(r) = 4 (r^-12 - r^-6)`.
//!
//! The pair minimum is `-1` at `r = D_STAR = 2^(1/6)`. There is no cutoff.

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Point3};

/// Optimal two-particle separation, `2^(1/6)`.
pub const D_STAR: f64 = 1.122_462_048_309_373;

/// Pairs closer than this are treated as coincident.
const COINCIDENT: f64 = 1e-12;

pub fn pair_energy(r: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::domain(format!("pair distance must be positive, got {r}")));
    }
    let inv6 = r.powi(-6);
    Ok(4.0 * (inv6 * inv6 - inv6))
}

/// `dv/dr = 4 (-12 r^-13 + 6 r^-7)`.
pub fn pair_energy_derivative(r: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::domain(format!("pair distance must be positive, got {r}")));
    }
    let inv6 = r.powi(-6);
    Ok(4.0 * (-12.0 * inv6 * inv6 + 6.0 * inv6) / r)
}

pub fn total_energy(c: &Configuration) -> Result<f64> {
    check_pairs(c)?;
    Ok(flat_energy(&c.to_flat()))
}

/// Analytic gradient as `3n` reals ordered `[dx0, dy0, dz0, dx1, ...]`.
pub fn gradient(c: &Configuration) -> Result<Vec<f64>> {
    check_pairs(c)?;
    let x = c.to_flat();
    let mut g = vec![0.0; x.len()];
    flat_energy_gradient(&x, &mut g);
    Ok(g)
}

pub fn energy_and_gradient(c: &Configuration) -> Result<(f64, Vec<f64>)> {
    check_pairs(c)?;
    let x = c.to_flat();
    let mut g = vec![0.0; x.len()];
    let e = flat_energy_gradient(&x, &mut g);
    Ok((e, g))
}

/// Interaction energy of particle `i` with all others.
pub fn particle_energy(c: &Configuration, i: usize) -> Result<f64> {
    let p = c[i];
    let mut e = 0.0;
    for (j, q) in c.iter().enumerate() {
        if j != i {
            e += pair_energy(p.distance(q)).map_err(|_| Error::Coincident(i.min(j), i.max(j)))?;
        }
    }
    Ok(e)
}

/// Energy a new particle at `site` would add to `c`.
pub fn insertion_energy(c: &Configuration, site: Point3) -> f64 {
    c.iter()
        .map(|q| {
            let inv6 = site.distance_squared(q).powi(-3);
            4.0 * (inv6 * inv6 - inv6)
        })
        .sum()
}

fn check_pairs(c: &Configuration) -> Result<()> {
    let pts = c.points();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if pts[i].distance(&pts[j]) < COINCIDENT {
                return Err(Error::Coincident(i, j));
            }
        }
    }
    Ok(())
}

pub(crate) fn flat_energy(x: &[f64]) -> f64 {
    let n = x.len() / 3;
    let mut e = 0.0;
    for i in 0..n {
        let (xi, yi, zi) = (x[3 * i], x[3 * i + 1], x[3 * i + 2]);
        for j in i + 1..n {
            let dx = xi - x[3 * j];
            let dy = yi - x[3 * j + 1];
            let dz = zi - x[3 * j + 2];
            let inv2 = 1.0 / (dx * dx + dy * dy + dz * dz);
            let inv6 = inv2 * inv2 * inv2;
            e += inv6 * inv6 - inv6;
        }
    }
    4.0 * e
}

/// Energy and gradient over a flat coordinate array; `g` is overwritten.
pub(crate) fn flat_energy_gradient(x: &[f64], g: &mut [f64]) -> f64 {
    let n = x.len() / 3;
    g.iter_mut().for_each(|v| *v = 0.0);
    let mut e = 0.0;
    for i in 0..n {
        let (xi, yi, zi) = (x[3 * i], x[3 * i + 1], x[3 * i + 2]);
        let (mut gx, mut gy, mut gz) = (0.0, 0.0, 0.0);
        for j in i + 1..n {
            let dx = xi - x[3 * j];
            let dy = yi - x[3 * j + 1];
            let dz = zi - x[3 * j + 2];
            let inv2 = 1.0 / (dx * dx + dy * dy + dz * dz);
            let inv6 = inv2 * inv2 * inv2;
            e += inv6 * inv6 - inv6;
            // (dv/dr) / r
            let f = 4.0 * (-12.0 * inv6 * inv6 + 6.0 * inv6) * inv2;
            gx += f * dx;
            gy += f * dy;
            gz += f * dz;
            g[3 * j] -= f * dx;
            g[3 * j + 1] -= f * dy;
            g[3 * j + 2] -= f * dz;
        }
        g[3 * i] += gx;
        g[3 * i + 1] += gy;
        g[3 * i + 2] += gz;
    }
    4.0 * e
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_config(rng: &mut ChaCha8Rng, n: usize) -> Configuration {
        // Rejection sampling keeps pairs apart so r^-12 stays moderate.
        let mut pts: Vec<Point3> = Vec::new();
        while pts.len() < n {
            let p = Point3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            if pts.iter().all(|q| q.distance(&p) > 0.8) {
                pts.push(p);
            }
        }
        Configuration::new(pts).unwrap()
    }

    fn rotate(p: Point3, axis: Point3, angle: f64) -> Point3 {
        let k = axis * (1.0 / axis.norm());
        let (s, c) = angle.sin_cos();
        p * c + k.cross(&p) * s + k * (k.dot(&p) * (1.0 - c))
    }

    #[test]
    fn pair_values() {
        assert!((pair_energy(D_STAR).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pair_energy(1.0).unwrap(), 0.0);
        let far = pair_energy(100.0).unwrap();
        assert!(far < 0.0 && far > -1e-10);
        assert!(pair_energy(0.0).is_err());
        assert!(pair_energy(-1.0).is_err());
        assert!(pair_energy(0.95).unwrap() > 0.0);
        assert!(pair_energy(1.05).unwrap() < 0.0);
    }

    #[test]
    fn pair_derivative_values() {
        assert!(pair_energy_derivative(D_STAR).unwrap().abs() < 1e-12);
        assert!((pair_energy_derivative(1.0).unwrap() + 24.0).abs() < 1e-12);
        assert!(pair_energy_derivative(2.0).unwrap() > 0.0);
        assert!(pair_energy_derivative(0.0).is_err());
    }

    #[test]
    fn small_clusters() {
        let pair = Configuration::from_flat(&[0.0, 0.0, 0.0, D_STAR, 0.0, 0.0]).unwrap();
        assert!((total_energy(&pair).unwrap() + 1.0).abs() < 1e-12);
        let g = gradient(&pair).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12));

        let h = D_STAR * 3f64.sqrt() / 2.0;
        let tri = Configuration::from_flat(&[
            0.0, 0.0, 0.0, D_STAR, 0.0, 0.0, D_STAR / 2.0, h, 0.0,
        ])
        .unwrap();
        assert!((total_energy(&tri).unwrap() + 3.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_particles_rejected() {
        let c = Configuration::from_flat(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(total_energy(&c), Err(Error::Coincident(0, 1))));
        assert!(gradient(&c).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-6;
        for _ in 0..10 {
            let c = random_config(&mut rng, 13);
            let g = gradient(&c).unwrap();
            let x = c.to_flat();
            let mut num = vec![0.0; x.len()];
            for k in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                num[k] = (flat_energy(&xp) - flat_energy(&xm)) / (2.0 * h);
            }
            let diff: f64 = g.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = num.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(diff / scale < 1e-6, "relative error {}", diff / scale);
        }
    }

    #[test]
    fn invariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let c = random_config(&mut rng, 9);
            let e = total_energy(&c).unwrap();

            let g = gradient(&c).unwrap();
            for axis in 0..3 {
                let net: f64 = g.iter().skip(axis).step_by(3).sum();
                assert!(net.abs() < 1e-10);
            }

            let mut perm = c.points().to_vec();
            perm.reverse();
            perm.swap(0, 3);
            let ep = total_energy(&Configuration::new(perm).unwrap()).unwrap();
            assert!((e - ep).abs() < 1e-10);

            let shift = Point3::new(rng.gen(), rng.gen(), rng.gen());
            let axis = Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 1.0);
            let angle = rng.gen_range(0.0..6.0);
            let moved: Vec<Point3> = c.iter().map(|p| rotate(*p, axis, angle) + shift).collect();
            let em = total_energy(&Configuration::new(moved).unwrap()).unwrap();
            assert!((e - em).abs() < 1e-10);
        }
    }

    #[test]
    fn particle_and_insertion_energies_agree_with_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_config(&mut rng, 8);
        let e = total_energy(&c).unwrap();
        let without = total_energy(&c.without(2)).unwrap();
        assert!((e - without - particle_energy(&c, 2).unwrap()).abs() < 1e-10);
        assert!((insertion_energy(&c.without(2), c[2]) - particle_energy(&c, 2).unwrap()).abs() < 1e-10);
    }
}
