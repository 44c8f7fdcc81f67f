use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::{save_checkpoint, Checkpoint};
use super::losses::{gan_loss_nodes, info_node, regularizer_nodes};
use super::{adam_step, AdamState, TrainConfig, TrainError, TrainHistory, TrainRecord};
use crate::autodiff::{Bindings, Graph, Var};
use crate::geometry::Curve;
use crate::networks::{sample_latent, DiscriminatorModel, GeneratorModel, OutputKind};
use crate::tensor::Tensor;

/// Discriminator-step graph: real and generated batches through D and Q.
#[derive(Debug, Clone)]
struct DiscriminatorGraph {
    graph: Graph,
    loss: Var,
    l_d: Var,
}

/// Generator-step graph: G followed by D, with the combined objective.
#[derive(Debug, Clone)]
struct GeneratorGraph {
    graph: Graph,
    curve: Var,
    loss: Var,
    l_g: Var,
    l_i: Var,
    r: Option<[Var; 4]>,
}

/// Owns the models, optimizer state and history of one training run.
#[derive(Debug, Clone)]
pub struct Trainer {
    gen: GeneratorModel,
    disc: DiscriminatorModel,
    cfg: TrainConfig,
    adam_g: AdamState,
    adam_d: AdamState,
    step: u64,
    history: TrainHistory,
    data: Tensor,
    started: Instant,
    d_graph: DiscriminatorGraph,
    g_graph: GeneratorGraph,
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub generator: GeneratorModel,
    pub discriminator: DiscriminatorModel,
    pub history: TrainHistory,
    pub checkpoints: Vec<PathBuf>,
}

/// Trains from scratch for `cfg.steps` iterations, writing periodic and final
/// checkpoints into `checkpoint_dir` when one is given.
pub fn train(
    data: &[Curve],
    gen: GeneratorModel,
    disc: DiscriminatorModel,
    cfg: &TrainConfig,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome, TrainError> {
    let mut trainer = Trainer::new(data, gen, disc, cfg.clone())?;
    let checkpoints = trainer.run_with_checkpoints(cfg.steps, checkpoint_dir)?;
    let (generator, discriminator, history) = trainer.into_parts();
    Ok(TrainOutcome {
        generator,
        discriminator,
        history,
        checkpoints,
    })
}

impl Trainer {
    pub fn new(
        data: &[Curve],
        gen: GeneratorModel,
        disc: DiscriminatorModel,
        cfg: TrainConfig,
    ) -> Result<Self, TrainError> {
        cfg.validate()?;
        let points = gen.config().points;
        if data.is_empty() {
            return Err(TrainError::Data("training set is empty".into()));
        }
        if let Some(bad) = data.iter().position(|c| c.len() != points) {
            return Err(TrainError::Data(format!(
                "sample {bad} has {} points, expected {points}",
                data[bad].len()
            )));
        }
        if disc.config().points != points || disc.config().latent_dim != gen.config().latent_dim {
            return Err(TrainError::Config(
                "generator and discriminator dimensions disagree".into(),
            ));
        }
        let flat: Vec<f64> = data.iter().flat_map(|c| c.flatten()).collect();
        let data = Tensor::new(vec![data.len(), points, 2], flat).expect("consistent sample sizes");
        let d_graph = build_discriminator_graph(&disc, &cfg);
        let g_graph = build_generator_graph(&gen, &disc, &cfg);
        Ok(Self {
            gen,
            disc,
            cfg,
            adam_g: AdamState::new(),
            adam_d: AdamState::new(),
            step: 0,
            history: TrainHistory::default(),
            data,
            started: Instant::now(),
            d_graph,
            g_graph,
        })
    }

    /// Runs until `target` completed steps. With a directory, writes
    /// `step-NNNNNN.ckpt` every `checkpoint_every` steps and `final.ckpt` at
    /// the end (also when no step was needed).
    pub fn run_with_checkpoints(&mut self, target: u64, dir: Option<&Path>) -> Result<Vec<PathBuf>, TrainError> {
        let mut written = Vec::new();
        let every = self.cfg.checkpoint_every;
        while self.step < target {
            self.step_once()?;
            if let Some(dir) = dir {
                if every > 0 && self.step % every == 0 && self.step < target {
                    let path = dir.join(format!("step-{:06}.ckpt", self.step));
                    save_checkpoint(&self.checkpoint(), &path)?;
                    written.push(path);
                }
            }
        }
        if let Some(dir) = dir {
            let path = dir.join("final.ckpt");
            save_checkpoint(&self.checkpoint(), &path)?;
            written.push(path);
        }
        Ok(written)
    }

    /// Restores a run saved with [`Trainer::checkpoint`].
    pub fn resume(data: &[Curve], ckpt: Checkpoint) -> Result<Self, TrainError> {
        let mut t = Self::new(data, ckpt.generator, ckpt.discriminator, ckpt.config)?;
        t.adam_g = ckpt.adam_g;
        t.adam_d = ckpt.adam_d;
        t.step = ckpt.step;
        t.history = ckpt.history;
        Ok(t)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            generator: self.gen.clone(),
            discriminator: self.disc.clone(),
            config: self.cfg.clone(),
            step: self.step,
            adam_g: self.adam_g.clone(),
            adam_d: self.adam_d.clone(),
            history: self.history.clone(),
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn generator(&self) -> &GeneratorModel {
        &self.gen
    }

    pub fn discriminator(&self) -> &DiscriminatorModel {
        &self.disc
    }

    pub fn history(&self) -> &TrainHistory {
        &self.history
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn into_parts(self) -> (GeneratorModel, DiscriminatorModel, TrainHistory) {
        (self.gen, self.disc, self.history)
    }

    /// Runs `steps` further iterations.
    pub fn run(&mut self, steps: u64) -> Result<(), TrainError> {
        for _ in 0..steps {
            self.step_once()?;
        }
        Ok(())
    }

    /// One discriminator update followed by one generator update.
    pub fn step_once(&mut self) -> Result<(), TrainError> {
        let step = self.step;
        // Each iteration draws from its own stream, so a resumed run sees
        // exactly the samples the uninterrupted run would have.
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(step);
        let batch = self.cfg.batch_size;
        let (latent, noise) = (self.gen.config().latent_dim, self.gen.config().noise_dim);

        let real = self.real_batch(&mut rng, batch);
        let (c_d, z_d) = sample_latent(&mut rng, batch, latent, noise);
        let (c_g, z_g) = sample_latent(&mut rng, batch, latent, noise);

        // Discriminator step on a freshly generated batch.
        let fake = {
            let mut b = Bindings::new().with("c", &c_d).with("z", &z_d);
            self.gen.params().bind_into(&mut b);
            self.g_graph.graph.evaluate(self.g_graph.curve, &b)?
        };
        let (l_d, d_grads) = {
            let mut b = Bindings::new()
                .with("x_real", &real)
                .with("x_fake", &fake)
                .with("c", &c_d);
            self.disc.params().bind_into(&mut b);
            let d = &self.d_graph;
            let trace = d.graph.forward(&b, &[d.loss, d.l_d])?;
            let loss = trace.value(d.loss).item();
            if !loss.is_finite() {
                return Err(TrainError::NonFinite {
                    step,
                    what: "discriminator loss",
                });
            }
            let names = self.disc.params().names();
            (trace.value(d.l_d).item(), d.graph.backward(&trace, d.loss, &names)?)
        };
        adam_step(self.disc.params_mut(), &d_grads, &mut self.adam_d, &self.cfg.adam_d());

        let (l_g, l_i, r, g_grads) = {
            let mut b = Bindings::new().with("c", &c_g).with("z", &z_g);
            self.gen.params().bind_into(&mut b);
            self.disc.params().bind_into(&mut b);
            let gg = &self.g_graph;
            let mut outputs = vec![gg.loss, gg.l_g, gg.l_i];
            outputs.extend(gg.r.iter().flatten());
            let trace = gg.graph.forward(&b, &outputs)?;
            if !trace.value(gg.loss).item().is_finite() {
                return Err(TrainError::NonFinite {
                    step,
                    what: "generator loss",
                });
            }
            let r = gg.r.map(|r| r.map(|v| trace.value(v).item())).unwrap_or([0.0; 4]);
            let names = self.gen.params().names();
            let grads = gg.graph.backward(&trace, gg.loss, &names)?;
            (trace.value(gg.l_g).item(), trace.value(gg.l_i).item(), r, grads)
        };
        adam_step(self.gen.params_mut(), &g_grads, &mut self.adam_g, &self.cfg.adam_g());

        self.step += 1;
        if self.step % self.cfg.eval_every == 0 {
            let record = TrainRecord {
                step: self.step,
                l_d,
                l_g,
                l_i,
                r,
                seconds: if self.cfg.record_wall_time {
                    self.started.elapsed().as_secs_f64()
                } else {
                    0.0
                },
            };
            if !record.is_finite() {
                return Err(TrainError::NonFinite {
                    step,
                    what: "recorded loss",
                });
            }
            self.history.records.push(record);
        }
        Ok(())
    }

    fn real_batch(&self, rng: &mut ChaCha8Rng, batch: usize) -> Tensor {
        let n = self.data.shape()[0];
        let per = self.data.shape()[1] * 2;
        let mut out = Vec::with_capacity(batch * per);
        for _ in 0..batch {
            let i = rng.random_range(0..n);
            out.extend_from_slice(self.data.row(i));
        }
        Tensor::new(vec![batch, self.data.shape()[1], 2], out).expect("batch shape")
    }
}

fn build_discriminator_graph(disc: &DiscriminatorModel, cfg: &TrainConfig) -> DiscriminatorGraph {
    let mut graph = Graph::new();
    let (x_real, x_fake, c) = (graph.input("x_real"), graph.input("x_fake"), graph.input("c"));
    let real = disc.build(&mut graph, x_real);
    let fake = disc.build(&mut graph, x_fake);
    let (l_d, _) = gan_loss_nodes(&mut graph, Some(real.logit), fake.logit);
    let l_d = l_d.expect("real logits given");
    let l_i = info_node(
        &mut graph,
        fake.q_mean,
        fake.q_logvar,
        c,
        cfg.batch_size,
        disc.config().latent_dim,
    );
    let weighted = graph.scale(l_i, -cfg.lambdas.info);
    let loss = graph.add(l_d, weighted);
    DiscriminatorGraph { graph, loss, l_d }
}

fn build_generator_graph(gen: &GeneratorModel, disc: &DiscriminatorModel, cfg: &TrainConfig) -> GeneratorGraph {
    let mut graph = Graph::new();
    let (c, z) = (graph.input("c"), graph.input("z"));
    let out = gen.build(&mut graph, c, z);
    let d = disc.build(&mut graph, out.curve);
    let (_, l_g) = gan_loss_nodes(&mut graph, None, d.logit);
    let l_i = info_node(
        &mut graph,
        d.q_mean,
        d.q_logvar,
        c,
        cfg.batch_size,
        disc.config().latent_dim,
    );
    let weighted = graph.scale(l_i, -cfg.lambdas.info);
    let mut loss = graph.add(l_g, weighted);
    let mut r = None;
    if gen.config().output == OutputKind::Bezier {
        let (p, w) = (
            out.control_points.expect("bezier output"),
            out.weights.expect("bezier output"),
        );
        let (a, b) = (out.mix_a.expect("bezier output"), out.mix_b.expect("bezier output"));
        let terms = regularizer_nodes(&mut graph, p, w, a, b, gen.config().degree + 1);
        let l = &cfg.lambdas;
        for (term, lambda) in terms.iter().zip([l.r1, l.r2, l.r3, l.r4]) {
            let scaled = graph.scale(*term, lambda);
            loss = graph.add(loss, scaled);
        }
        r = Some(terms);
    }
    GeneratorGraph {
        graph,
        curve: out.curve,
        loss,
        l_g,
        l_i,
        r,
    }
}
