//! Helpers shared by the integration and acceptance tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use pcgan::data::{gen_circles, write_cloud_binary, write_manifest, CircleDatasetConfig, CircleTruth, ManifestEntry};
use pcgan::diffcore::gradcheck::{central_difference, relative_error, STEP};
use pcgan::diffcore::{Activation, Binding, Matrix, NodeId, ParamSet, Tape};
use pcgan::nets::{Critic, Encoder, EncoderConfig, ObjectGenerator, PointGenerator, Pool};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Writes a circle dataset with ground truth to `dir/manifest.json`.
pub fn write_circles(dir: &Path, clouds: usize, points: usize, seed: u64) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let ds = gen_circles(&CircleDatasetConfig {
        clouds,
        points,
        seed,
        ..Default::default()
    })
    .unwrap();
    let entries: Vec<ManifestEntry> = ds
        .clouds
        .iter()
        .zip(&ds.truth)
        .enumerate()
        .map(|(i, (c, t)): (usize, (_, &CircleTruth))| {
            let name = format!("c{i:05}.bin");
            write_cloud_binary(&dir.join(&name), c).unwrap();
            ManifestEntry {
                path: name,
                label: "circle".into(),
                center: Some(t.center.to_vec()),
                radius: Some(t.radius),
                mesh: None,
            }
        })
        .collect();
    let manifest = dir.join("manifest.json");
    write_manifest(&manifest, &entries).unwrap();
    manifest
}

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let v: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::from_vec(rows, cols, v).unwrap()
}

/// Entries uniform in `[-2, 2]`.
pub fn uniform_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let v: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-2.0..=2.0)).collect();
    Matrix::from_vec(rows, cols, v).unwrap()
}

/// Entries bounded away from zero, so kinks at the origin are never straddled.
pub fn away_from_zero<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let v: Vec<f64> = (0..rows * cols)
        .map(|_| {
            let mag: f64 = rng.random_range(0.05..2.0);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    Matrix::from_vec(rows, cols, v).unwrap()
}

/// Columns whose largest entry leads the runner-up by a clear margin.
pub fn distinct_column_max<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    loop {
        let m = uniform_matrix(rows, cols, rng);
        let ok = (0..cols).all(|c| {
            let mut col: Vec<f64> = (0..rows).map(|r| m.get(r, c)).collect();
            col.sort_by(|a, b| b.total_cmp(a));
            rows < 2 || col[0] - col[1] > 1e-2
        });
        if ok {
            return m;
        }
    }
}

/// `Σ out ⊙ W` for a fixed pseudo-random `W`, so every output entry reaches the loss
/// with a distinct weight.
fn weighted_sum(tape: &mut Tape, out: NodeId) -> NodeId {
    let (r, c) = tape.value(out).shape();
    let w: Vec<f64> = (0..r * c).map(|i| ((i as f64 + 1.0) * 0.7548776662).sin()).collect();
    let wn = tape.constant(Matrix::from_vec(r, c, w).unwrap()).unwrap();
    let p = tape.mul(out, wn).unwrap();
    tape.sum(p)
}

/// Relative error between tape gradients and central differences with respect to every
/// entry of every input matrix.
pub fn check_inputs(inputs: &[Matrix], build: impl Fn(&mut Tape, &[NodeId]) -> NodeId) -> f64 {
    let mut tape = Tape::new();
    let ids: Vec<NodeId> = inputs.iter().map(|m| tape.input(m.clone()).unwrap()).collect();
    let out = build(&mut tape, &ids);
    let loss = weighted_sum(&mut tape, out);
    let grads = tape.backward_scalar(loss).unwrap();
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for (k, m) in inputs.iter().enumerate() {
        analytic.extend_from_slice(grads.get(ids[k]).unwrap().as_slice());
        let f = |v: &[f64]| {
            let mut t = Tape::new();
            let ids: Vec<NodeId> = inputs
                .iter()
                .enumerate()
                .map(|(j, mj)| {
                    let value = if j == k {
                        Matrix::from_vec(mj.rows(), mj.cols(), v.to_vec()).unwrap()
                    } else {
                        mj.clone()
                    };
                    t.input(value).unwrap()
                })
                .collect();
            let out = build(&mut t, &ids);
            let l = weighted_sum(&mut t, out);
            t.scalar(l)
        };
        numeric.extend(central_difference(f, m.as_slice(), STEP));
    }
    relative_error(&analytic, &numeric)
}

/// Gradient check of a network with respect to all its parameters and every input matrix.
pub struct NetworkCheck {
    /// Relative error between the tape gradient and central differences with step `STEP`.
    pub error: f64,
    /// Central differences at `STEP` and `STEP / 10` disagree, so a kink (a max-pool tie
    /// or a leaky-ReLU corner) lies inside the stencil and the difference quotient is not
    /// a derivative estimate at this point.
    pub kink_in_stencil: bool,
}

/// Records a network on a tape from its parameters, binding and input nodes.
pub type NetworkBuilder = dyn Fn(&ParamSet, &mut Tape, &Binding, &[NodeId]) -> NodeId;

pub fn check_network(params: &mut ParamSet, inputs: &[Matrix], build: &NetworkBuilder) -> NetworkCheck {
    let eval = |params: &ParamSet, inputs: &[Matrix]| {
        let mut t = Tape::new();
        let b = params.bind(&mut t, false);
        let ids: Vec<NodeId> = inputs.iter().map(|m| t.constant(m.clone()).unwrap()).collect();
        let out = build(params, &mut t, &b, &ids);
        let l = weighted_sum(&mut t, out);
        t.scalar(l)
    };
    let mut tape = Tape::new();
    let b = params.bind(&mut tape, true);
    let ids: Vec<NodeId> = inputs.iter().map(|m| tape.input(m.clone()).unwrap()).collect();
    let out = build(params, &mut tape, &b, &ids);
    let loss = weighted_sum(&mut tape, out);
    let grads = tape.backward_scalar(loss).unwrap();

    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    let mut fine = Vec::new();
    for i in 0..params.len() {
        let (rows, cols) = params.get(i).shape();
        match grads.get(b.node(i)) {
            Some(g) => analytic.extend_from_slice(g.as_slice()),
            None => analytic.extend(std::iter::repeat_n(0.0, rows * cols)),
        }
        for r in 0..rows {
            for c in 0..cols {
                let orig = params.get(i).value().get(r, c);
                for (h, into) in [(STEP, &mut numeric), (STEP / 10.0, &mut fine)] {
                    params.get_mut(i).set(r, c, orig + h).unwrap();
                    let up = eval(params, inputs);
                    params.get_mut(i).set(r, c, orig - h).unwrap();
                    let down = eval(params, inputs);
                    into.push((up - down) / (2.0 * h));
                }
                params.get_mut(i).set(r, c, orig).unwrap();
            }
        }
    }
    for (k, m) in inputs.iter().enumerate() {
        analytic.extend_from_slice(grads.get(ids[k]).unwrap().as_slice());
        let f = |v: &[f64]| {
            let mut all = inputs.to_vec();
            all[k] = Matrix::from_vec(m.rows(), m.cols(), v.to_vec()).unwrap();
            eval(params, &all)
        };
        numeric.extend(central_difference(f, m.as_slice(), STEP));
        fine.extend(central_difference(f, m.as_slice(), STEP / 10.0));
    }
    NetworkCheck {
        error: relative_error(&analytic, &numeric),
        kink_in_stencil: relative_error(&numeric, &fine) > 1e-6,
    }
}

/// Gives every parameter (biases included) a random non-zero value.
pub fn randomize(params: &mut ParamSet, scale: f64, rng: &mut impl Rng) {
    for p in params.iter_mut() {
        let (r, c) = p.shape();
        let m = random_matrix(r, c, rng);
        p.set_value(Matrix::from_vec(r, c, m.as_slice().iter().map(|v| v * scale).collect()).unwrap())
            .unwrap();
    }
}

/// Worst relative error over every tape primitive for one random configuration.
pub fn primitive_errors(seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = pcgan::seeded_rng(seed);
    let n = rng.random_range(1..6);
    let d = rng.random_range(1..5);
    let o = rng.random_range(1..5);
    let slope = rng.random_range(0.0..1.0);
    let a = uniform_matrix(n, d, &mut rng);
    let b = uniform_matrix(n, d, &mut rng);
    let w = uniform_matrix(o, d, &mut rng);
    let bias = uniform_matrix(1, o, &mut rng);
    let row = uniform_matrix(1, d, &mut rng);
    let kinked = away_from_zero(n, d, &mut rng);
    let peaked = distinct_column_max(n, d, &mut rng);
    let k: f64 = rng.random_range(-3.0..3.0);
    let reps = rng.random_range(1..5);

    let mut out: Vec<(&'static str, f64)> = vec![
        (
            "linear",
            check_inputs(&[a.clone(), w.clone(), bias], |t, x| {
                t.linear(x[0], x[1], Some(x[2])).unwrap()
            }),
        ),
        (
            "linear_no_bias",
            check_inputs(&[a.clone(), w], |t, x| t.linear(x[0], x[1], None).unwrap()),
        ),
        (
            "add",
            check_inputs(&[a.clone(), b.clone()], |t, x| t.add(x[0], x[1]).unwrap()),
        ),
        (
            "sub",
            check_inputs(&[a.clone(), b.clone()], |t, x| t.sub(x[0], x[1]).unwrap()),
        ),
        (
            "mul",
            check_inputs(&[a.clone(), b.clone()], |t, x| t.mul(x[0], x[1]).unwrap()),
        ),
        (
            "add_row",
            check_inputs(&[a.clone(), row.clone()], |t, x| t.add_row(x[0], x[1]).unwrap()),
        ),
        ("scale", check_inputs(std::slice::from_ref(&a), |t, x| t.scale(x[0], k))),
        (
            "softplus",
            check_inputs(std::slice::from_ref(&a), |t, x| t.softplus(x[0])),
        ),
        (
            "identity",
            check_inputs(std::slice::from_ref(&a), |t, x| {
                t.activation(x[0], Activation::Identity)
            }),
        ),
        (
            "leaky_relu",
            check_inputs(std::slice::from_ref(&kinked), |t, x| t.leaky_relu(x[0], slope)),
        ),
        ("max_pool", check_inputs(&[peaked], |t, x| t.max_pool(x[0]).unwrap())),
        (
            "mean_pool",
            check_inputs(std::slice::from_ref(&a), |t, x| t.mean_pool(x[0]).unwrap()),
        ),
        (
            "broadcast_rows",
            check_inputs(std::slice::from_ref(&row), |t, x| t.broadcast_rows(x[0], reps).unwrap()),
        ),
        (
            "concat_cols",
            check_inputs(&[a.clone(), b.clone()], |t, x| {
                t.concat_cols(&[x[0], x[1], x[0]]).unwrap()
            }),
        ),
        ("square", check_inputs(std::slice::from_ref(&a), |t, x| t.square(x[0]))),
        ("abs", check_inputs(&[kinked], |t, x| t.abs(x[0]))),
        ("sum", check_inputs(std::slice::from_ref(&a), |t, x| t.sum(x[0]))),
        (
            "mean",
            check_inputs(std::slice::from_ref(&a), |t, x| t.mean(x[0]).unwrap()),
        ),
    ];
    out.push((
        "composite",
        check_inputs(&[a, b, row], |t, x| {
            let s = t.sub(x[0], x[1]).unwrap();
            let q = t.square(s);
            let p = t.add_row(q, x[2]).unwrap();
            let sp = t.softplus(p);
            t.mean_pool(sp).unwrap()
        }),
    ));
    out
}

/// Gradient-check result for one network: name, relative error, and how many draws were
/// discarded because a kink fell inside the finite-difference stencil.
pub type NetworkResult = (&'static str, f64, usize);

fn until_smooth(rng: &mut pcgan::Rng, mut attempt: impl FnMut(&mut pcgan::Rng) -> NetworkCheck) -> (f64, usize) {
    for redraws in 0..50 {
        let c = attempt(rng);
        if !c.kink_in_stencil {
            return (c.error, redraws);
        }
    }
    panic!("no kink-free draw in 50 attempts");
}

/// Relative error for each network (`Q`, `G_x`, `G_θ`, critic) in one random configuration.
pub fn network_errors(seed: u64) -> Vec<NetworkResult> {
    let mut rng = pcgan::seeded_rng(seed);
    let act = if rng.random_bool(0.5) {
        Activation::Softplus
    } else {
        Activation::LeakyRelu {
            slope: rng.random_range(0.05..0.5),
        }
    };
    let pool = if rng.random_bool(0.5) { Pool::Mean } else { Pool::Max };
    let d = rng.random_range(2..4);
    let latent = rng.random_range(2..6);
    let noise = rng.random_range(1..4);
    let n = rng.random_range(2..7);
    let width = |rng: &mut pcgan::Rng| rng.random_range(2..7);
    let widths: Vec<usize> = (0..rng.random_range(1..3)).map(|_| width(&mut rng)).collect();
    let head: Vec<usize> = (0..rng.random_range(0..2)).map(|_| width(&mut rng)).collect();
    let enc_cfg = EncoderConfig {
        equivariant_widths: widths.clone(),
        pool,
        head_widths: head,
        activation: act,
    };

    let (q, q_redraws) = until_smooth(&mut rng, |rng| {
        let mut enc = Encoder::new(d, latent, &enc_cfg, rng).unwrap();
        randomize(enc.params_mut(), 0.5, rng);
        let x = uniform_matrix(n, d, rng);
        let e = enc.clone();
        check_network(enc.params_mut(), &[x], &move |_, t, b, ids| {
            e.forward(t, ids[0], b).unwrap()
        })
    });
    let (gx, gx_redraws) = until_smooth(&mut rng, |rng| {
        let mut gen = PointGenerator::new(noise, latent, &widths, d, act, rng).unwrap();
        randomize(gen.params_mut(), 0.5, rng);
        let z = random_matrix(n, noise, rng);
        let psi = uniform_matrix(1, latent, rng);
        let g = gen.clone();
        check_network(gen.params_mut(), &[z, psi], &move |_, t, b, ids| {
            g.forward(t, ids[0], ids[1], b).unwrap()
        })
    });
    let (gt, gt_redraws) = until_smooth(&mut rng, |rng| {
        let mut obj = ObjectGenerator::new(noise, &widths, latent, act, rng).unwrap();
        randomize(obj.params_mut(), 0.5, rng);
        let u = random_matrix(n, noise, rng);
        let g = obj.clone();
        check_network(obj.params_mut(), &[u], &move |_, t, b, ids| {
            g.forward(t, ids[0], b).unwrap()
        })
    });
    let (f, f_redraws) = until_smooth(&mut rng, |rng| {
        let mut critic = Critic::new(d, latent, &widths, act, 10.0, rng).unwrap();
        randomize(critic.params_mut(), 0.5, rng);
        let pts = uniform_matrix(n, d, rng);
        let psi = uniform_matrix(1, latent, rng);
        let c = critic.clone();
        check_network(critic.params_mut(), &[pts, psi], &move |_, t, b, ids| {
            c.forward(t, ids[0], Some(ids[1]), b).unwrap()
        })
    });

    vec![
        ("Q", q, q_redraws),
        ("G_x", gx, gx_redraws),
        ("G_theta", gt, gt_redraws),
        ("critic", f, f_redraws),
    ]
}
