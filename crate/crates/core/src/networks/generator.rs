use std::f64::consts::LN_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::{conv, dense, ParamSet};
use super::{CurveGenerator, NetworkError};
use crate::autodiff::{Bindings, Graph, Trace, Var};
use crate::geometry::{
    part_point_counts, rotation_matrix, uniform_grid, Axis, BezierParams, Curve, KumaraswamyMixture, Point,
    SymmetrySpec, MAX_DEGREE,
};
use crate::tensor::Tensor;

/// Lower bound added to the softplus weight activation.
pub const WEIGHT_FLOOR: f64 = 1e-4;

/// How the ends of the generated control polygon are tied down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Constraint {
    Open,
    /// Last control point tied to the first.
    Closed,
    /// Last control point fixed at a coordinate.
    PinnedLast {
        point: Point,
    },
}

/// What the deconvolution path emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    /// Control points and weights fed through the rational Bézier layer.
    Bezier,
    /// Curve points directly, without any curve parameterization.
    DirectPoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub latent_dim: usize,
    pub noise_dim: usize,
    /// Degree `n` of the prim's rational Bézier curve.
    pub degree: usize,
    /// `M`: the mixture has `M + 1` Kumaraswamy components.
    pub kumaraswamy_m: usize,
    pub symmetry: SymmetrySpec,
    pub constraint: Constraint,
    pub output: OutputKind,
    /// Points in the assembled curve.
    pub points: usize,
    /// Width of the fully connected layer feeding the deconvolutions.
    pub hidden: usize,
    /// Channels entering each stride-2 deconvolution stage; the last stage
    /// emits `(x, y, raw weight)` (or `(x, y)` for direct points).
    pub deconv_channels: Vec<usize>,
    pub kernel_size: usize,
    /// Width of the hidden layer on the parameter-variable path.
    pub param_hidden: usize,
    pub leaky_alpha: f64,
    /// Multiplier applied to emitted coordinates, matching the data scale.
    pub coord_scale: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            latent_dim: 2,
            noise_dim: 10,
            degree: 31,
            kumaraswamy_m: 3,
            symmetry: SymmetrySpec::None,
            constraint: Constraint::Open,
            output: OutputKind::Bezier,
            points: crate::CURVE_POINTS,
            hidden: 128,
            deconv_channels: vec![32, 16],
            kernel_size: 5,
            param_hidden: 64,
            leaky_alpha: 0.2,
            coord_scale: 1.0,
        }
    }
}

impl GeneratorConfig {
    pub fn components(&self) -> usize {
        self.kumaraswamy_m + 1
    }

    /// Length of the sequence emitted by the deconvolution path.
    fn grid_len(&self) -> usize {
        match self.output {
            OutputKind::Bezier => self.degree + 1,
            OutputKind::DirectPoints => self.points,
        }
    }

    fn grid_channels(&self) -> usize {
        match self.output {
            OutputKind::Bezier => 3,
            OutputKind::DirectPoints => 2,
        }
    }

    fn initial_len(&self) -> usize {
        self.grid_len() >> self.deconv_channels.len()
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |m: String| Err(NetworkError::Config(m));
        if self.latent_dim == 0 || self.noise_dim == 0 {
            return bad("latent and noise dimensions must be positive".into());
        }
        if self.deconv_channels.is_empty() || self.deconv_channels.contains(&0) {
            return bad("need at least one deconvolution stage with positive channels".into());
        }
        if self.kernel_size % 2 == 0 {
            return bad(format!("kernel size {} must be odd", self.kernel_size));
        }
        let stages = self.deconv_channels.len();
        let len = self.grid_len();
        if len % (1 << stages) != 0 || self.initial_len() == 0 {
            return bad(format!(
                "sequence length {len} is not divisible by 2^{stages} deconvolution stages"
            ));
        }
        if !(self.coord_scale > 0.0) {
            return bad("coordinate scale must be positive".into());
        }
        self.symmetry
            .validate()
            .map_err(|e| NetworkError::Config(e.to_string()))?;
        match self.output {
            OutputKind::Bezier => {
                if !(1..=MAX_DEGREE).contains(&self.degree) {
                    return bad(format!("degree {} outside 1..={MAX_DEGREE}", self.degree));
                }
                if part_point_counts(self.points, self.symmetry.parts())
                    .iter()
                    .any(|&c| c < 2)
                {
                    return bad(format!(
                        "{} points cannot cover {} parts",
                        self.points,
                        self.symmetry.parts()
                    ));
                }
            }
            OutputKind::DirectPoints => {
                if self.symmetry != SymmetrySpec::None {
                    return bad("symmetry needs the Bézier output".into());
                }
            }
        }
        Ok(())
    }
}

/// Graph nodes produced by [`GeneratorModel::build`].
#[derive(Debug, Clone)]
pub struct GeneratorOutputs {
    /// `[B, points, 2]`.
    pub curve: Var,
    /// Prim control points after constraints, `[B, n+1, 2]`.
    pub control_points: Option<Var>,
    /// `[B, n+1]`.
    pub weights: Option<Var>,
    /// Kumaraswamy shapes of every part, `[B, parts * (M+1)]`.
    pub mix_a: Option<Var>,
    pub mix_b: Option<Var>,
    /// Mixture weights, `[B, parts * (M+1)]`.
    pub mix_c: Option<Var>,
    /// Sampling locations of each part, `[B, count_p]`.
    pub part_u: Vec<Var>,
}

/// One generated design.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDesign {
    pub curve: Curve,
    /// Prim parameters sampled with the first part's locations.
    pub prim: Option<BezierParams>,
    pub mixtures: Vec<KumaraswamyMixture>,
    pub part_u: Vec<Vec<f64>>,
}

/// The curve generator: latent code and noise in, curve out.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorModel {
    config: GeneratorConfig,
    params: ParamSet,
}

impl GeneratorModel {
    pub fn new(config: GeneratorConfig, seed: u64) -> Result<Self, NetworkError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let input = config.latent_dim + config.noise_dim;
        let c0 = config.deconv_channels[0];
        params.init_dense(&mut rng, "gen.fc0", input, config.hidden);
        params.init_dense(&mut rng, "gen.fc1", config.hidden, config.initial_len() * c0);
        let mut channels = config.deconv_channels.clone();
        channels.push(config.grid_channels());
        for (i, pair) in channels.windows(2).enumerate() {
            // Each output position of a stride-2 transpose sees about half the taps.
            let fan_in = pair[0] * config.kernel_size.div_ceil(2);
            params.init_conv(
                &mut rng,
                &format!("gen.deconv{i}"),
                config.kernel_size,
                pair[0],
                pair[1],
                fan_in,
            );
        }
        if config.output == OutputKind::Bezier {
            params.init_dense(&mut rng, "gen.u.fc0", input, config.param_hidden);
            let raw = config.symmetry.parts() * 3 * config.components();
            params.init_dense(&mut rng, "gen.u.fc1", config.param_hidden, raw);
            // Start from the identity warp: a = b = 1, equal mixture weights.
            if let Some(w) = params.get_mut("gen.u.fc1.w") {
                w.data_mut().iter_mut().for_each(|v| *v *= 0.1);
            }
        }
        Ok(Self { config, params })
    }

    pub fn from_parts(config: GeneratorConfig, params: ParamSet) -> Result<Self, NetworkError> {
        config.validate()?;
        let template = Self::new(config.clone(), 0)?;
        check_params(&template.params, &params)?;
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Adds the generator to `g`, reading its parameters from inputs named
    /// after the entries of [`GeneratorModel::params`].
    pub fn build(&self, g: &mut Graph, c: Var, z: Var) -> GeneratorOutputs {
        let cfg = &self.config;
        let alpha = cfg.leaky_alpha;
        let input = g.concat(&[c, z], 1);

        let h = dense(g, input, "gen.fc0");
        let h = g.leaky_relu(h, alpha);
        let h = dense(g, h, "gen.fc1");
        let h = g.leaky_relu(h, alpha);
        let mut h = g.reshape(h, &[-1, cfg.initial_len() as isize, cfg.deconv_channels[0] as isize]);
        let stages = cfg.deconv_channels.len();
        for i in 0..stages {
            h = conv(g, h, &format!("gen.deconv{i}"), 2, true);
            if i + 1 < stages {
                h = g.leaky_relu(h, alpha);
            }
        }
        let grid = h;
        let xy = g.slice(grid, 2, 0, 2);
        let xy = g.scale(xy, cfg.coord_scale);

        match cfg.output {
            OutputKind::DirectPoints => {
                let curve = self.apply_endpoint_constraint(g, xy, cfg.points);
                GeneratorOutputs {
                    curve,
                    control_points: None,
                    weights: None,
                    mix_a: None,
                    mix_b: None,
                    mix_c: None,
                    part_u: Vec::new(),
                }
            }
            OutputKind::Bezier => self.build_bezier(g, input, grid, xy),
        }
    }

    fn build_bezier(&self, g: &mut Graph, input: Var, grid: Var, xy: Var) -> GeneratorOutputs {
        let cfg = &self.config;
        let ncp = cfg.degree + 1;
        let raw_w = g.slice(grid, 2, 2, 3);
        let raw_w = g.reshape(raw_w, &[-1, ncp as isize]);
        let w = g.softplus(raw_w);
        let w = g.offset(w, WEIGHT_FLOOR);
        let w = g.label(w, "gen.weights");

        let p = self.constrain_control_points(g, xy);
        let p = g.label(p, "gen.control_points");

        let h = dense(g, input, "gen.u.fc0");
        let h = g.leaky_relu(h, cfg.leaky_alpha);
        let raw = dense(g, h, "gen.u.fc1");
        let k = cfg.components();
        let counts = part_point_counts(cfg.points, cfg.symmetry.parts());
        let parts = part_vars(g, p, w, &cfg.symmetry, ncp);
        let (mut a_all, mut b_all, mut c_all, mut part_u, mut pieces) = (vec![], vec![], vec![], vec![], vec![]);
        for (idx, ((pp, wp), count)) in parts.into_iter().zip(counts).enumerate() {
            let base = idx * 3 * k;
            let ra = g.slice(raw, 1, base, base + k);
            let rb = g.slice(raw, 1, base + k, base + 2 * k);
            let rc = g.slice(raw, 1, base + 2 * k, base + 3 * k);
            // 1 + softplus(r) - softplus(0): positive, equal to 1 at r = 0.
            let a = g.softplus(ra);
            let a = g.offset(a, 1.0 - LN_2);
            let b = g.softplus(rb);
            let b = g.offset(b, 1.0 - LN_2);
            let c = g.softmax(rc);
            let u = g.kumaraswamy(a, b, c, uniform_grid(count - 1));
            pieces.push(g.rational_bezier(pp, wp, u));
            a_all.push(a);
            b_all.push(b);
            c_all.push(c);
            part_u.push(u);
        }
        let curve = if pieces.len() == 1 {
            pieces[0]
        } else {
            g.concat(&pieces, 1)
        };
        let mix_a = if a_all.len() == 1 {
            a_all[0]
        } else {
            g.concat(&a_all, 1)
        };
        let mix_b = if b_all.len() == 1 {
            b_all[0]
        } else {
            g.concat(&b_all, 1)
        };
        let mix_c = if c_all.len() == 1 {
            c_all[0]
        } else {
            g.concat(&c_all, 1)
        };
        GeneratorOutputs {
            curve: g.label(curve, "gen.curve"),
            control_points: Some(p),
            weights: Some(w),
            mix_a: Some(mix_a),
            mix_b: Some(mix_b),
            mix_c: Some(mix_c),
            part_u,
        }
    }

    /// Applies the closed / pinned constraint to the last element of `[B, len, 2]`.
    fn apply_endpoint_constraint(&self, g: &mut Graph, pts: Var, len: usize) -> Var {
        match self.config.constraint {
            Constraint::Open => pts,
            Constraint::Closed => {
                let body = g.slice(pts, 1, 0, len - 1);
                let first = g.slice(pts, 1, 0, 1);
                g.concat(&[body, first], 1)
            }
            Constraint::PinnedLast { point } => {
                let body = g.slice(pts, 1, 0, len - 1);
                let last = g.slice(pts, 1, len - 1, len);
                let zeroed = g.scale(last, 0.0);
                let target = g.constant(Tensor::vector(point.to_vec()));
                let pinned = g.add(zeroed, target);
                g.concat(&[body, pinned], 1)
            }
        }
    }

    fn constrain_control_points(&self, g: &mut Graph, xy: Var) -> Var {
        let ncp = self.config.degree + 1;
        match self.config.symmetry {
            SymmetrySpec::None => self.apply_endpoint_constraint(g, xy, ncp),
            SymmetrySpec::Axis { axis } => {
                // Ends on the axis keep the prim/mirror joint continuous; a
                // closed figure also needs the first point there.
                let mut mask = [1.0, 1.0];
                mask[axis.normal_coordinate()] = 0.0;
                let mask = g.constant(Tensor::vector(mask.to_vec()));
                let pts = match self.config.constraint {
                    Constraint::PinnedLast { .. } => self.apply_endpoint_constraint(g, xy, ncp),
                    _ => project_end(g, xy, ncp - 1, ncp, mask),
                };
                if self.config.constraint == Constraint::Closed {
                    project_end(g, pts, 0, ncp, mask)
                } else {
                    pts
                }
            }
            SymmetrySpec::Rotational { angle, .. } => {
                // Last point is the first point of the next rotated copy.
                let body = g.slice(xy, 1, 0, ncp - 1);
                let first = g.slice(xy, 1, 0, 1);
                let first = g.reshape(first, &[-1, 2]);
                let r = rotation_matrix(angle);
                let rot = g.constant(Tensor::new(vec![2, 2], vec![r[0][0], r[0][1], r[1][0], r[1][1]]).expect("2x2"));
                let next = g.matmul(first, rot);
                let next = g.reshape(next, &[-1, 1, 2]);
                g.concat(&[body, next], 1)
            }
        }
    }

    /// Builds and evaluates the generator for a batch of `(c, z)`.
    pub fn forward(&self, c: &Tensor, z: &Tensor) -> Result<Vec<GeneratedDesign>, NetworkError> {
        self.check_inputs(c, z)?;
        let mut g = Graph::new();
        let (cv, zv) = (g.input("c"), g.input("z"));
        let out = self.build(&mut g, cv, zv);
        let mut bindings = Bindings::new().with("c", c).with("z", z);
        self.params.bind_into(&mut bindings);
        let mut wanted = vec![out.curve];
        wanted.extend(out.control_points);
        wanted.extend(out.weights);
        wanted.extend(out.mix_a);
        wanted.extend(out.mix_b);
        wanted.extend(out.mix_c);
        wanted.extend(out.part_u.iter().copied());
        let trace = g.forward(&bindings, &wanted)?;
        self.collect(&out, &trace)
    }

    fn collect(&self, out: &GeneratorOutputs, trace: &Trace) -> Result<Vec<GeneratedDesign>, NetworkError> {
        let curves = trace.value(out.curve);
        let batch = curves.shape()[0];
        let k = self.config.components();
        let mut designs = Vec::with_capacity(batch);
        for s in 0..batch {
            let curve = Curve::from_flat(curves.row(s));
            let part_u: Vec<Vec<f64>> = out.part_u.iter().map(|u| trace.value(*u).row(s).to_vec()).collect();
            let mut mixtures = Vec::new();
            let mut prim = None;
            if let (Some(p), Some(w), Some(a), Some(b), Some(c)) =
                (out.control_points, out.weights, out.mix_a, out.mix_b, out.mix_c)
            {
                let cp: Vec<Point> = trace.value(p).row(s).chunks_exact(2).map(|q| [q[0], q[1]]).collect();
                let weights = trace.value(w).row(s).to_vec();
                prim = Some(BezierParams::new(cp, weights, part_u[0].clone())?);
                let (a, b, c) = (trace.value(a).row(s), trace.value(b).row(s), trace.value(c).row(s));
                for part in 0..part_u.len() {
                    let r = part * k..(part + 1) * k;
                    mixtures.push(KumaraswamyMixture::new(
                        a[r.clone()].to_vec(),
                        b[r.clone()].to_vec(),
                        c[r].to_vec(),
                    )?);
                }
            }
            designs.push(GeneratedDesign {
                curve,
                prim,
                mixtures,
                part_u,
            });
        }
        Ok(designs)
    }

    fn check_inputs(&self, c: &Tensor, z: &Tensor) -> Result<(), NetworkError> {
        let cfg = &self.config;
        let ok = c.rank() == 2 && z.rank() == 2 && c.shape()[0] == z.shape()[0];
        if !ok || c.shape()[1] != cfg.latent_dim || z.shape()[1] != cfg.noise_dim {
            return Err(NetworkError::InputShape(format!(
                "expected c [B, {}] and z [B, {}], got {:?} and {:?}",
                cfg.latent_dim,
                cfg.noise_dim,
                c.shape(),
                z.shape()
            )));
        }
        Ok(())
    }
}

impl CurveGenerator for GeneratorModel {
    fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    fn noise_dim(&self) -> usize {
        self.config.noise_dim
    }

    fn generate(&self, c: &Tensor, z: &Tensor) -> Result<Vec<Curve>, NetworkError> {
        self.check_inputs(c, z)?;
        let mut g = Graph::new();
        let (cv, zv) = (g.input("c"), g.input("z"));
        let out = self.build(&mut g, cv, zv);
        let mut bindings = Bindings::new().with("c", c).with("z", z);
        self.params.bind_into(&mut bindings);
        let curves = g.evaluate(out.curve, &bindings)?;
        Ok((0..curves.shape()[0])
            .map(|s| Curve::from_flat(curves.row(s)))
            .collect())
    }
}

/// Replaces element `index` of `[B, len, 2]` by its projection through `mask`.
fn project_end(g: &mut Graph, pts: Var, index: usize, len: usize, mask: Var) -> Var {
    let point = g.slice(pts, 1, index, index + 1);
    let projected = g.mul(point, mask);
    let mut pieces = Vec::new();
    if index > 0 {
        pieces.push(g.slice(pts, 1, 0, index));
    }
    pieces.push(projected);
    if index + 1 < len {
        pieces.push(g.slice(pts, 1, index + 1, len));
    }
    g.concat(&pieces, 1)
}

/// Control points and weights of each part as graph nodes.
fn part_vars(g: &mut Graph, p: Var, w: Var, spec: &SymmetrySpec, ncp: usize) -> Vec<(Var, Var)> {
    match *spec {
        SymmetrySpec::None => vec![(p, w)],
        SymmetrySpec::Axis { axis } => {
            let s = g.constant(Tensor::vector(axis_reflection(axis).to_vec()));
            let rev = g.reverse(p, 1);
            let mirrored = g.mul(rev, s);
            let wm = g.reverse(w, 1);
            vec![(p, w), (mirrored, wm)]
        }
        SymmetrySpec::Rotational { parts, angle } => {
            let flat = g.reshape(p, &[-1, 2]);
            let mut out = vec![(p, w)];
            for i in 1..parts {
                let r = rotation_matrix(angle * i as f64);
                let rot = g.constant(Tensor::new(vec![2, 2], vec![r[0][0], r[0][1], r[1][0], r[1][1]]).expect("2x2"));
                let turned = g.matmul(flat, rot);
                let turned = g.reshape(turned, &[-1, ncp as isize, 2]);
                out.push((turned, w));
            }
            out
        }
    }
}

fn axis_reflection(axis: Axis) -> [f64; 2] {
    axis.reflection()
}

pub(crate) fn check_params(template: &ParamSet, actual: &ParamSet) -> Result<(), NetworkError> {
    for (name, t) in template.iter() {
        match actual.get(name) {
            None => return Err(NetworkError::MissingParameter(name.clone())),
            Some(a) if a.shape() != t.shape() => {
                return Err(NetworkError::ParameterShape {
                    name: name.clone(),
                    expected: t.shape().to_vec(),
                    actual: a.shape().to_vec(),
                })
            }
            Some(_) => {}
        }
    }
    Ok(())
}
