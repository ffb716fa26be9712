//! Parameter sweeps backing the frozen expectations in the example tests.
//! Scratch tool, not part of the library surface.

use neuro_l2l_core::baselines::value_iteration;
use neuro_l2l_core::emulator::{Crossbar, EmulatorConfig, QuantMode};
use neuro_l2l_core::env::{mab_reference, sample_mab, sample_mdp, MabFamily, Task};
use neuro_l2l_core::outer::SearchSpace;
use neuro_l2l_core::plasticity::{run_trial, run_trial_from, Rule, TdParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sure_thing_grid() {
    println!("== sure-thing bandit p=(1,0), TD(1), T=100, 1000 trials ==");
    let task = Task::Mab(neuro_l2l_core::env::Mab {
        p_arm: [1.0, 0.0],
        family: MabFamily::Structured,
    });
    for band in [(0.4, 0.6), (0.15, 0.25), (0.17, 0.18)] {
        for alpha0 in [0.3, 0.5, 1.0] {
            for decay in [0.99, 0.995, 1.0] {
                for xi in [0.5, 1.0, 2.0, 5.0] {
                    let config = EmulatorConfig {
                        init_band: band,
                        ..EmulatorConfig::default()
                    };
                    let rule = Rule::Td1(TdParams {
                        alpha0,
                        alpha_decay: decay,
                        gamma: 1.0,
                        lambda: 0.0,
                    });
                    let mut rng = ChaCha8Rng::seed_from_u64(4242);
                    let mut total = 0.0;
                    for _ in 0..1000 {
                        let traj =
                            run_trial(&task, &rule, config.clone(), xi, 1.0, 100, &mut rng)
                                .unwrap();
                        total += traj.raw_return;
                    }
                    let mean = total / 1000.0;
                    if mean >= 85.0 {
                        println!(
                            "band ({},{}) a0 {alpha0} decay {decay} xi {xi}: mean {mean:.1}",
                            band.0, band.1
                        );
                    }
                }
            }
        }
    }
}

fn mdp_convergence_grid() {
    println!("== TD(lambda) ideal-mode convergence to Q*, 2e4 steps ==");
    let mut mdps = Vec::new();
    for seed in [1u64, 2, 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mdp = sample_mdp(2, 2, 0.9, &mut rng).unwrap();
        let (q, _) = value_iteration(&mdp, 1e-8).unwrap();
        mdps.push((seed, mdp, q));
    }
    let config = EmulatorConfig {
        quant: QuantMode::Ideal,
        ..EmulatorConfig::default()
    };
    for lambda in [0.0, 0.05, 0.1, 0.2, 0.4] {
        for alpha0 in [0.2, 0.3, 0.5] {
            for decay in [0.9995, 0.9997, 0.9999] {
                let mut worst = 0.0f64;
                for (seed, mdp, q) in &mdps {
                    let rule = Rule::TdLambda(TdParams {
                        alpha0,
                        alpha_decay: decay,
                        gamma: 0.9,
                        lambda,
                    });
                    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
                    let mut bar = Crossbar::new(2, 2, config.clone(), &mut rng).unwrap();
                    let task = Task::Mdp(mdp.clone());
                    run_trial_from(&mut bar, &task, &rule, 2.0, 1.0, 20_000, &mut rng)
                        .unwrap();
                    for s in 0..2 {
                        for a in 0..2 {
                            worst = worst.max((bar.shadow(s, a) - q.get(s, a)).abs());
                        }
                    }
                }
                println!("lambda {lambda} a0 {alpha0} decay {decay}: max err {worst:.4}");
            }
        }
    }
}

fn structured_theta_landscape() {
    println!("== structured MAB: fixed-theta scores vs random-theta baseline ==");
    // 300 structured tasks, T=100, normalized by (T*mean, T*max).
    let mut task_rng = ChaCha8Rng::seed_from_u64(777);
    let mut tasks = Vec::new();
    // Same scoreability floor the experiment applies: span > 0.5*sqrt(T).
    while tasks.len() < 300 {
        let mab = sample_mab(MabFamily::Structured, &mut task_rng);
        let (rand_ref, opt_ref) = mab_reference(&mab, 100);
        if opt_ref - rand_ref > 5.0 {
            tasks.push((Task::Mab(mab), rand_ref, opt_ref));
        }
    }
    let score = |config: &EmulatorConfig, alpha0: f64, decay: f64, xi: f64, zeta: f64| -> f64 {
        let rule = Rule::Td1(TdParams {
            alpha0,
            alpha_decay: decay,
            gamma: 1.0,
            lambda: 0.0,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(4243);
        let mut sum = 0.0;
        let mut n = 0usize;
        for (task, rand_ref, opt_ref) in &tasks {
            let traj = run_trial(task, &rule, config.clone(), xi, zeta, 100, &mut rng).unwrap();
            let span = opt_ref - rand_ref;
            if span.abs() > 1e-9 {
                sum += (traj.raw_return - rand_ref) / span;
                n += 1;
            }
        }
        sum / n as f64
    };
    for band in [(0.4, 0.6), (0.15, 0.25), (0.17, 0.18)] {
        let config = EmulatorConfig {
            init_band: band,
            ..EmulatorConfig::default()
        };
        let mut best = f64::NEG_INFINITY;
        let mut best_desc = String::new();
        for alpha0 in [0.1, 0.3, 0.5, 1.0] {
            for decay in [0.95, 0.99, 1.0] {
                for xi in [0.5, 1.0, 2.0, 5.0, 20.0] {
                    for zeta in [1.0, 10.0] {
                        let m = score(&config, alpha0, decay, xi, zeta);
                        if m > best {
                            best = m;
                            best_desc =
                                format!("a0 {alpha0} decay {decay} xi {xi} zeta {zeta}");
                        }
                    }
                }
            }
        }
        // Random-theta baseline from the actual search space decoding.
        let space = SearchSpace::mab_td1();
        let mut base_rng = ChaCha8Rng::seed_from_u64(909);
        let mut base_sum = 0.0;
        for _ in 0..32 {
            let enc = space.sample_init(&mut base_rng);
            let d = space.decode(&enc);
            base_sum += score(&config, d[0], d[1].max(f64::MIN_POSITIVE), d[2], d[3]);
        }
        let baseline = base_sum / 32.0;
        println!(
            "band ({:.2},{:.2}): best {best:.3} [{best_desc}] baseline {baseline:.3} gap {:.3}",
            band.0,
            band.1,
            best - baseline
        );
    }
}

fn ce_quadratic_sweep() {
    use neuro_l2l_core::outer::{build_optimizer, DimSpec, Encoding, FitnessRecord, OptimizerSpec};
    println!("== CE pop 32 elite 0.25 on noiseless quadratics, gen-30 distance ==");
    for target in [vec![0.3, -0.2], vec![0.3, -0.2, 0.5], vec![0.3, -0.2, 0.5, 0.1]] {
        let d = target.len();
        let space = SearchSpace {
            dims: (0..d)
                .map(|i| DimSpec::new(&format!("x{i}"), 0.0, 0.0, Encoding::Free))
                .collect(),
        };
        let mut dists: Vec<(f64, u64)> = Vec::new();
        for seed in 1..=40u64 {
            let spec = OptimizerSpec::Ce {
                pop: 32,
                elite_frac: 0.25,
                diag_cov: false,
            };
            let mut opt = build_optimizer(&spec, space.clone(), seed, 30).unwrap();
            for gen in 0..30u64 {
                let cands = opt.ask().unwrap();
                let recs: Vec<FitnessRecord> = cands
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let f = -c
                            .encoded
                            .iter()
                            .zip(&target)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>();
                        FitnessRecord {
                            generation: gen,
                            candidate_id: i,
                            encoded: c.encoded.clone(),
                            decoded: c.encoded.clone(),
                            per_task_scores: vec![f],
                            mean_fitness: f,
                        }
                    })
                    .collect();
                opt.tell(&recs).unwrap();
            }
            let best = opt.best_encoded();
            let dist = best
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dists.push((dist, seed));
        }
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let n_pass = dists.iter().filter(|(d, _)| *d <= 0.05).count();
        println!(
            "dim {d}: pass {n_pass}/40  min {:.4}(seed {})  med {:.4}  max {:.4}(seed {})",
            dists[0].0,
            dists[0].1,
            dists[20].0,
            dists[39].0,
            dists[39].1
        );
    }
}

fn mab_experiment(
    family: MabFamily,
    rule: neuro_l2l_core::outer::RuleSpec,
    seed: u64,
) -> neuro_l2l_core::outer::Experiment {
    use neuro_l2l_core::outer::{Experiment, FamilySpec};
    Experiment::new(
        FamilySpec::Mab { family },
        rule,
        50,
        100,
        QuantMode::Bits(6),
        seed,
    )
    .unwrap()
    .with_emulator_base(EmulatorConfig {
        init_band: (0.17, 0.18),
        ..EmulatorConfig::default()
    })
    .unwrap()
}

fn l2l_gain_probe() {
    use neuro_l2l_core::outer::{random_theta_baseline, run_l2l, L2lRun, OptimizerSpec, RuleSpec};
    println!("== criterion-5 probe: CE pop32 G40 N50 T100 structured TD1 ==");
    for seed in [1u64, 2, 3] {
        let t0 = std::time::Instant::now();
        let exp = mab_experiment(MabFamily::Structured, RuleSpec::Td1, seed);
        let run = L2lRun {
            experiment: exp.clone(),
            optimizer: OptimizerSpec::Ce {
                pop: 32,
                elite_frac: 0.25,
                diag_cov: false,
            },
            generations: 40,
            holdout_tasks: 50,
        };
        let out = run_l2l(&run, |_, _| Ok(())).unwrap();
        let base = random_theta_baseline(&exp, 32, 50).unwrap();
        let base_mean = base.iter().map(|r| r.mean_fitness).sum::<f64>() / base.len() as f64;
        println!(
            "seed {seed}: holdout {:.3} baseline {:.3} gap {:.3} theta {:?} ({:.1}s)",
            out.best.holdout_mean,
            base_mean,
            out.best.holdout_mean - base_mean,
            out.best
                .decoded
                .iter()
                .map(|v| (v * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>(),
            t0.elapsed().as_secs_f64()
        );
    }
}

fn ann_gain_probe() {
    use neuro_l2l_core::outer::{run_l2l, L2lRun, OptimizerSpec, RuleSpec};
    let diag: bool = std::env::args()
        .nth(2)
        .map(|s| s == "diag")
        .unwrap_or(false);
    println!("== criterion-6 probe: CE on 52-dim ANN rule, same budget, diag={diag} ==");
    for seed in [1u64, 2, 3] {
        let t0 = std::time::Instant::now();
        let exp = mab_experiment(MabFamily::Structured, RuleSpec::Ann, seed);
        let run = L2lRun {
            experiment: exp,
            optimizer: OptimizerSpec::Ce {
                pop: 32,
                elite_frac: 0.25,
                diag_cov: diag,
            },
            generations: 40,
            holdout_tasks: 50,
        };
        let out = run_l2l(&run, |_, _| Ok(())).unwrap();
        println!(
            "seed {seed}: holdout {:.3} ({:.1}s)",
            out.best.holdout_mean,
            t0.elapsed().as_secs_f64()
        );
    }
}

fn transfer_probe() {
    use neuro_l2l_core::analysis::transfer_report;
    use neuro_l2l_core::outer::{Experiment, FamilySpec, run_l2l, L2lRun, OptimizerSpec, RuleSpec};
    let n_train: usize = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(200);
    let gens: usize = std::env::args()
        .nth(3)
        .and_then(|s| s.parse().ok())
        .unwrap_or(60);
    let n_eval: usize = std::env::args()
        .nth(4)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2000);
    println!(
        "== criterion-7 probe: N={n_train} gens={gens} eval={n_eval} =="
    );
    for seed in [1u64, 2, 3] {
        let t0 = std::time::Instant::now();
        let raw: bool = std::env::args().nth(5).map(|s| s == "raw").unwrap_or(false);
        let horizon: usize = std::env::args()
            .nth(6)
            .and_then(|s| s.parse().ok())
            .unwrap_or(100);
        let band_lo: f64 = std::env::args()
            .nth(7)
            .and_then(|s| s.parse().ok())
            .unwrap_or(0.17);
        let band_hi: f64 = std::env::args()
            .nth(8)
            .and_then(|s| s.parse().ok())
            .unwrap_or(0.18);
        let train = |family: MabFamily| {
            let mut exp = Experiment::new(
                FamilySpec::Mab { family },
                RuleSpec::Td1,
                n_train,
                horizon,
                QuantMode::Bits(6),
                seed,
            )
            .unwrap()
            .with_emulator_base(EmulatorConfig {
                init_band: (band_lo, band_hi),
                ..EmulatorConfig::default()
            })
            .unwrap();
            exp.normalize = !raw;
            let run = L2lRun {
                experiment: exp,
                optimizer: OptimizerSpec::Ce {
                    pop: 32,
                    elite_frac: 0.25,
                    diag_cov: false,
                },
                generations: gens,
                holdout_tasks: 200,
            };
            let out = run_l2l(&run, |_, _| Ok(())).unwrap();
            (out.best.encoded, out.best.decoded)
        };
        let (theta_s, dec_s) = train(MabFamily::Structured);
        let (theta_u, dec_u) = train(MabFamily::Unstructured);
        let eval_exp = Experiment::new(
            FamilySpec::Mab {
                family: MabFamily::Structured,
            },
            RuleSpec::Td1,
            50,
            horizon,
            QuantMode::Bits(6),
            seed + 900,
        )
        .unwrap()
        .with_emulator_base(EmulatorConfig {
            init_band: (band_lo, band_hi),
            ..EmulatorConfig::default()
        })
        .unwrap();
        let rep =
            transfer_report(&eval_exp, &theta_s, &theta_u, n_eval, 2000, seed + 901).unwrap();
        println!(
            "seed {seed}: mean_s {:.3} mean_u {:.3} diff {:.4} ci [{:.4}, {:.4}] ({:.0}s)",
            rep.mean_a,
            rep.mean_b,
            rep.mean_diff,
            rep.ci_lo,
            rep.ci_hi,
            t0.elapsed().as_secs_f64()
        );
        let r3 = |d: &[f64]| {
            d.iter()
                .map(|v| (v * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>()
        };
        println!("  theta_s {:?}", r3(&dec_s));
        println!("  theta_u {:?}", r3(&dec_u));
    }
}

fn optimizer_ordering_probe() {
    use neuro_l2l_core::outer::{run_l2l, L2lRun, OptimizerSpec, RuleSpec};
    println!("== criterion-8 probe: equal-budget CE/ES/SA/GD on structured TD1 ==");
    let specs = [
        OptimizerSpec::Ce {
            pop: 32,
            elite_frac: 0.25,
            diag_cov: false,
        },
        OptimizerSpec::Es {
            pop: 32,
            sigma: 0.1,
            learn_rate: 0.05,
        },
        OptimizerSpec::Sa {
            chains: 8,
            t0: 0.1,
            t_end: 0.001,
            noise: 0.3,
        },
        OptimizerSpec::Gd {
            probe_eps: 0.01,
            step_size: 0.5,
        },
    ];
    let budget = 1280usize;
    for seed in [1u64, 2, 3, 4, 5] {
        let t0 = std::time::Instant::now();
        let mut line = format!("seed {seed}:");
        for spec in specs {
            let exp = mab_experiment(MabFamily::Structured, RuleSpec::Td1, seed);
            let generations = budget / spec.gen_cost(exp.space.dim());
            let run = L2lRun {
                experiment: exp,
                optimizer: spec,
                generations,
                holdout_tasks: 50,
            };
            let out = run_l2l(&run, |_, _| Ok(())).unwrap();
            line.push_str(&format!(" {} {:.3}", spec.name(), out.best.holdout_mean));
        }
        println!("{line} ({:.0}s)", t0.elapsed().as_secs_f64());
    }
}

fn es_sweep() {
    use neuro_l2l_core::outer::{build_optimizer, Candidate, OptimizerSpec, RuleSpec};
    println!("== ES sweep, incumbent holdout score, structured TD1, 40 gens ==");
    for sigma in [0.2, 0.3, 0.5] {
        for lr in [1.0, 1.5, 2.0] {
            let mut line = format!("sigma {sigma} lr {lr}:");
            for seed in [1u64, 2, 3, 4, 5] {
                let exp = mab_experiment(MabFamily::Structured, RuleSpec::Td1, seed);
                let spec = OptimizerSpec::Es {
                    pop: 32,
                    sigma,
                    learn_rate: lr,
                };
                let mut opt = build_optimizer(&spec, exp.space.clone(), exp.master_seed, 40).unwrap();
                for gen in 0..40u64 {
                    let candidates = opt.ask().unwrap();
                    let records = exp.evaluate_generation(gen, &candidates).unwrap();
                    opt.tell(&records).unwrap();
                }
                let incumbent = Candidate::new(opt.best_encoded());
                let score = exp.evaluate_holdout(40, &[incumbent], 50).unwrap()[0].mean_fitness;
                line.push_str(&format!(" {:.3}", score));
            }
            println!("{line}");
        }
    }
}

fn incumbent_ordering_probe() {
    use neuro_l2l_core::outer::{
        build_optimizer, run_l2l, Candidate, L2lRun, OptimizerSpec, RuleSpec,
    };
    println!("== criterion-8 probe B: incumbent-only vs deliverable finals ==");
    let specs = [
        OptimizerSpec::Ce {
            pop: 32,
            elite_frac: 0.25,
            diag_cov: false,
        },
        OptimizerSpec::Es {
            pop: 32,
            sigma: 0.3,
            learn_rate: 2.0,
        },
        OptimizerSpec::Gd {
            probe_eps: 0.01,
            step_size: 0.5,
        },
    ];
    let budget = 1280usize;
    for seed in [1u64, 2, 3, 4, 5] {
        let mut line = format!("seed {seed}:");
        for spec in specs {
            let exp = mab_experiment(MabFamily::Structured, RuleSpec::Td1, seed);
            let generations = budget / spec.gen_cost(exp.space.dim());
            // Manual loop for the incumbent-only reading.
            let mut opt =
                build_optimizer(&spec, exp.space.clone(), exp.master_seed, generations).unwrap();
            for gen in 0..generations as u64 {
                let candidates = opt.ask().unwrap();
                let records = exp.evaluate_generation(gen, &candidates).unwrap();
                opt.tell(&records).unwrap();
            }
            let incumbent = Candidate::new(opt.best_encoded());
            let inc_score = exp
                .evaluate_holdout(generations as u64, &[incumbent], 50)
                .unwrap()[0]
                .mean_fitness;
            let run = L2lRun {
                experiment: exp,
                optimizer: spec,
                generations,
                holdout_tasks: 50,
            };
            let deliv = run_l2l(&run, |_, _| Ok(())).unwrap().best.holdout_mean;
            line.push_str(&format!(
                " {} inc {:.3} deliv {:.3} |",
                spec.name(),
                inc_score,
                deliv
            ));
        }
        println!("{line}");
    }
}

fn mdp_hw_landscape() {
    use neuro_l2l_core::outer::{Experiment, FamilySpec, RuleSpec};
    use neuro_l2l_core::seed::{stream, StreamRole};
    let horizon: usize = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(500);
    let gamma_task: f64 = std::env::args()
        .nth(3)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.9);
    println!("== MDP 2x4 hw-fidelity landscape, T={horizon}, gamma {gamma_task}, 50 tasks ==");
    let exp = Experiment::new(
        FamilySpec::Mdp {
            n_states: 2,
            n_actions: 4,
            gamma: gamma_task,
        },
        RuleSpec::TdLambda,
        20,
        horizon,
        QuantMode::Bits(6),
        7,
    )
    .unwrap();
    let tasks: Vec<_> = (0..50)
        .map(|ti| {
            exp.sample_scoreable_task(StreamRole::Analysis, &[9, ti])
                .unwrap()
        })
        .collect();
    let eval = |decoded: &[f64], band: (f64, f64)| -> f64 {
        let mut exp2 = exp.clone();
        exp2 = exp2
            .with_emulator_base(EmulatorConfig {
                init_band: band,
                ..EmulatorConfig::default()
            })
            .unwrap();
        let agent = exp2.agent_from_decoded(decoded).unwrap();
        let mut total = 0.0;
        for (ti, (task, r, o)) in tasks.iter().enumerate() {
            let mut rng = stream(7, StreamRole::Analysis, &[8, ti as u64]);
            total += exp2.task_fitness(&agent, task, *r, *o, &mut rng).unwrap();
        }
        total / tasks.len() as f64
    };
    // Ceiling check: the greedy-on-immediate-reward policy, scored with the
    // task discount, tells us how much of the normalized span a myopic
    // strategy can reach on this family.
    {
        use neuro_l2l_core::env::mdp_expected_return_policy;
        let mut total = 0.0;
        for (task, r, o) in &tasks {
            let Task::Mdp(m) = task else { unreachable!() };
            let myopic: Vec<usize> = (0..m.n_states)
                .map(|s| {
                    (0..m.n_actions)
                        .max_by(|&a, &b| {
                            m.expected_reward(s, a)
                                .partial_cmp(&m.expected_reward(s, b))
                                .unwrap()
                        })
                        .unwrap()
                })
                .collect();
            let v = mdp_expected_return_policy(m, &myopic, horizon, m.gamma);
            total += (v - r) / (o - r);
        }
        println!("myopic-greedy oracle: {:.3}", total / tasks.len() as f64);
    }
    let mut results: Vec<(f64, String)> = Vec::new();
    for alpha in [0.6, 1.0] {
        for gam in [0.0, 0.02, 0.05] {
            for period in [1.0, 2.0, 3.0] {
                for band in [(0.9, 1.0), (0.4, 0.6)] {
                    for xi in [0.5, 2.0, 8.0] {
                        let d = [alpha, gam, 0.2, xi, 1.0, period, 63.0, 0.0];
                        let m = eval(&d, band);
                        results.push((
                            m,
                            format!(
                                "alpha {alpha} gamma {gam} period {period} band ({},{}) xi {xi}",
                                band.0, band.1
                            ),
                        ));
                    }
                }
            }
        }
    }
    results.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for (m, desc) in results.iter().take(15) {
        println!("{m:.3}  {desc}");
    }
    println!("   ...");
    for (m, desc) in results.iter().rev().take(3) {
        println!("{m:.3}  {desc}");
    }
    println!("-- random thetas, default band --");
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let space = SearchSpace::mdp_td_lambda(horizon);
    let mut best = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for _ in 0..32 {
        let enc = space.sample_init(&mut rng);
        let m = eval(&space.decode(&enc), (0.4, 0.6));
        sum += m;
        best = best.max(m);
    }
    println!("random 32: mean {:.3} best {best:.3}", sum / 32.0);
}

fn mdp_trial_trace() {
    use neuro_l2l_core::baselines::greedy_policy;
    use neuro_l2l_core::emulator::SelectionCase;
    use neuro_l2l_core::plasticity::run_trial_observed;
    let horizon = 500usize;
    let alpha: f64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.3);
    let period: u64 = std::env::args()
        .nth(3)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);
    let w_max: f64 = std::env::args()
        .nth(4)
        .and_then(|s| s.parse().ok())
        .unwrap_or(63.0);
    println!("== one MDP trial, alpha {alpha} period {period} w_max {w_max}, T={horizon} ==");
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mdp = sample_mdp(2, 4, 0.9, &mut rng).unwrap();
    let (q, _) = value_iteration(&mdp, 1e-8).unwrap();
    let greedy = greedy_policy(&q);
    println!("q*: {q:?} greedy {greedy:?}");
    let config = EmulatorConfig {
        w_max,
        w_min: 0.0,
        rescale_period: Some(period),
        ..EmulatorConfig::default()
    };
    let rule = Rule::TdLambda(TdParams {
        alpha0: alpha,
        alpha_decay: 1.0,
        gamma: 0.9,
        lambda: 0.2,
    });
    let task = Task::Mdp(mdp.clone());
    let mut bar = Crossbar::new(2, 4, config, &mut rng).unwrap();
    let win = 100usize;
    let mut counts = [0usize; 3];
    let mut match_greedy = 0usize;
    let mut printed = 0usize;
    run_trial_observed(
        &mut bar,
        &task,
        &rule,
        0.5,
        1.0,
        horizon,
        &mut rng,
        |bar, step| {
            match step.selection_case.unwrap() {
                SelectionCase::Timeout => counts[0] += 1,
                SelectionCase::SingleSpike => counts[1] += 1,
                SelectionCase::MultiSpike => counts[2] += 1,
            }
            if step.action == greedy[step.state] {
                match_greedy += 1;
            }
            if (step.t + 1) % win == 0 {
                let ws: Vec<String> = (0..2)
                    .map(|s| {
                        let row: Vec<String> = (0..4)
                            .map(|a| format!("{:.0}", bar.weight(s, a)))
                            .collect();
                        row.join("/")
                    })
                    .collect();
                println!(
                    "t {:3}: timeout {:2} single {:2} multi {:2} greedy-match {:3.0}% w [{}] [{}]",
                    step.t + 1,
                    counts[0],
                    counts[1],
                    counts[2],
                    100.0 * match_greedy as f64 / win as f64,
                    ws[0],
                    ws[1]
                );
                counts = [0; 3];
                match_greedy = 0;
                printed += 1;
                let _ = printed;
            }
        },
    )
    .unwrap();
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "sure" => sure_thing_grid(),
        "mdphw" => mdp_hw_landscape(),
        "mdptrace" => mdp_trial_trace(),
        "mdp" => mdp_convergence_grid(),
        "theta" => structured_theta_landscape(),
        "ce" => ce_quadratic_sweep(),
        "l2l" => l2l_gain_probe(),
        "ann" => ann_gain_probe(),
        "transfer" => transfer_probe(),
        "opt8" => optimizer_ordering_probe(),
        "opt8b" => incumbent_ordering_probe(),
        "es" => es_sweep(),
        _ => {
            sure_thing_grid();
            mdp_convergence_grid();
            structured_theta_landscape();
        }
    }
}
