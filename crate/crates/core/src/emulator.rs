//! Event-driven emulation of a spiking crossbar agent.
//!
//! A state neuron drives one row of a weighted crossbar; leaky
//! integrate-and-fire action neurons race to threshold and the spike pattern
//! picks the action. Two inhibition gains shape the race: `xi` suppresses
//! action neurons once somebody has fired (exploitation pressure), `zeta`
//! feeds back onto the state neuron and shuts the race down (selection
//! effort). Weights live in a shadow array; what the neurons see is the
//! quantized hardware view.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Neuron budget of the emulated chip: state and action neurons together
/// must fit one 32x32 crossbar's drivers. Only enforced when weights are
/// quantized; ideal mode has no hardware to be faithful to.
pub const CROSSBAR_NEURON_CAP: usize = 32;

/// Headroom factor keeping the state neuron above threshold until inhibition
/// has eaten through the margin; makes the zeta stop graded instead of
/// all-or-nothing.
const STATE_ACTIVITY_MARGIN: f64 = 1.2;

/// Weight storage model of the crossbar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantMode {
    /// Shadow weights are used as-is: no rounding, no clamping.
    Ideal,
    /// b-bit unsigned conductance levels: the visible weight is the shadow
    /// rounded to an integer in [0, 2^b - 1], and the shadow itself is kept
    /// inside that range.
    Bits(u8),
}

impl QuantMode {
    /// Largest representable level, if bounded.
    pub fn cap(&self) -> Option<f64> {
        match self {
            QuantMode::Ideal => None,
            QuantMode::Bits(b) => Some(((1u64 << b) - 1) as f64),
        }
    }
}

/// Fixed electrical and timing parameters of the emulated chip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmulatorConfig {
    /// Membrane time constant in ticks.
    pub tau_m: f64,
    pub v_thresh: f64,
    pub v_reset: f64,
    /// Ticks between a spike and its effect landing downstream.
    pub syn_delay: usize,
    /// Hard cap on the selection window, in ticks.
    pub select_timeout: usize,
    pub quant: QuantMode,
    /// Target range of the periodic weight rescale.
    pub w_min: f64,
    pub w_max: f64,
    /// Apply a rescale every this many agent steps; None disables it.
    pub rescale_period: Option<u64>,
    /// Fresh weights are drawn uniformly from this fraction band of
    /// [w_min, w_max].
    pub init_band: (f64, f64),
}

impl Default for EmulatorConfig {
    fn default() -> Self {
        EmulatorConfig {
            tau_m: 10.0,
            v_thresh: 100.0,
            v_reset: 0.0,
            syn_delay: 2,
            select_timeout: 100,
            quant: QuantMode::Bits(6),
            w_min: 0.0,
            w_max: 63.0,
            rescale_period: None,
            init_band: (0.4, 0.6),
        }
    }
}

impl EmulatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tau_m must be positive, got {}",
                self.tau_m
            )));
        }
        if !(self.v_thresh > self.v_reset) {
            return Err(Error::InvalidArgument(format!(
                "v_thresh {} must exceed v_reset {}",
                self.v_thresh, self.v_reset
            )));
        }
        if self.syn_delay == 0 || self.select_timeout == 0 {
            return Err(Error::InvalidArgument(
                "syn_delay and select_timeout must be at least 1".into(),
            ));
        }
        if !(self.w_min < self.w_max) {
            return Err(Error::InvalidArgument(format!(
                "rescale range [{}, {}] is empty",
                self.w_min, self.w_max
            )));
        }
        let (lo, hi) = self.init_band;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "init band ({lo}, {hi}) must satisfy 0 <= lo <= hi <= 1"
            )));
        }
        if let QuantMode::Bits(b) = self.quant {
            if b == 0 || b > 16 {
                return Err(Error::InvalidArgument(format!(
                    "weight resolution must be 1..=16 bits, got {b}"
                )));
            }
            let cap = self.quant.cap().unwrap();
            if self.w_min < 0.0 || self.w_max > cap {
                return Err(Error::InvalidArgument(format!(
                    "rescale range [{}, {}] leaves the representable range [0, {cap}]",
                    self.w_min, self.w_max
                )));
            }
        }
        Ok(())
    }
}

/// How an action got picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionCase {
    /// Exactly one action neuron fired; no randomness involved.
    SingleSpike,
    /// Several fired inside the window; uniform pick among them.
    MultiSpike,
    /// Nobody fired before the window closed; uniform pick over all actions.
    Timeout,
}

/// Outcome of one selection window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub action: usize,
    pub case: SelectionCase,
    /// Tick of the first spike, or the full window length on timeout.
    pub latency: usize,
    pub n_spikers: usize,
}

/// Result of a rescale attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RescaleOutcome {
    /// Weights were mapped through w' = k * w + d.
    Applied { k: f64, d: f64 },
    /// Weight spread was too small to stretch; nothing changed.
    Skipped,
}

/// Crossbar of shadow weights plus the chip parameters that read them.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossbar {
    pub n_states: usize,
    pub n_actions: usize,
    pub config: EmulatorConfig,
    shadow: Vec<f64>,
}

impl Crossbar {
    /// Dimension guard shared by the constructors; callers can use it to
    /// validate a configuration before building anything.
    pub fn check_dims(n_states: usize, n_actions: usize, quant: QuantMode) -> Result<()> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidArgument(
                "crossbar needs at least one state and one action".into(),
            ));
        }
        if matches!(quant, QuantMode::Bits(_)) && n_states + n_actions > CROSSBAR_NEURON_CAP {
            return Err(Error::CrossbarCapacity {
                n_states,
                n_actions,
                cap: CROSSBAR_NEURON_CAP,
            });
        }
        Ok(())
    }

    /// Fresh crossbar with weights drawn uniformly from the configured band
    /// of the rescale range, row-major draw order.
    pub fn new<R: Rng>(
        n_states: usize,
        n_actions: usize,
        config: EmulatorConfig,
        rng: &mut R,
    ) -> Result<Self> {
        Self::check_dims(n_states, n_actions, config.quant)?;
        config.validate()?;
        let span = config.w_max - config.w_min;
        let lo = config.w_min + config.init_band.0 * span;
        let hi = config.w_min + config.init_band.1 * span;
        let shadow = (0..n_states * n_actions)
            .map(|_| {
                if hi > lo {
                    rng.random_range(lo..hi)
                } else {
                    lo
                }
            })
            .collect();
        Ok(Crossbar {
            n_states,
            n_actions,
            config,
            shadow,
        })
    }

    /// Crossbar with explicit starting weights (row-major), pushed through
    /// the same clamp discipline an update would apply.
    pub fn from_weights(
        n_states: usize,
        n_actions: usize,
        config: EmulatorConfig,
        weights: Vec<f64>,
    ) -> Result<Self> {
        Self::check_dims(n_states, n_actions, config.quant)?;
        config.validate()?;
        if weights.len() != n_states * n_actions {
            return Err(Error::InvalidArgument(format!(
                "expected {} weights, got {}",
                n_states * n_actions,
                weights.len()
            )));
        }
        let mut bar = Crossbar {
            n_states,
            n_actions,
            config,
            shadow: weights,
        };
        if let Some(cap) = bar.config.quant.cap() {
            for w in &mut bar.shadow {
                *w = w.clamp(0.0, cap);
            }
        }
        Ok(bar)
    }

    #[inline]
    fn idx(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    /// Raw accumulated weight.
    #[inline]
    pub fn shadow(&self, s: usize, a: usize) -> f64 {
        self.shadow[self.idx(s, a)]
    }

    /// Weight as the hardware sees it.
    #[inline]
    pub fn weight(&self, s: usize, a: usize) -> f64 {
        let w = self.shadow[self.idx(s, a)];
        match self.config.quant.cap() {
            Some(cap) => w.clamp(0.0, cap).round(),
            None => w,
        }
    }

    pub fn shadow_weights(&self) -> &[f64] {
        &self.shadow
    }

    /// Adds delta to the shadow weight, keeping it representable.
    pub fn apply_update(&mut self, s: usize, a: usize, delta: f64) {
        let i = self.idx(s, a);
        self.shadow[i] += delta;
        if let Some(cap) = self.config.quant.cap() {
            self.shadow[i] = self.shadow[i].clamp(0.0, cap);
        }
    }

    /// Affine stretch of all shadow weights onto [w_min, w_max]. The current
    /// extremes land exactly on the endpoints (snapped, so no float residue),
    /// every other weight keeps its relative position, and orderings are
    /// preserved. A near-degenerate spread is left untouched.
    pub fn rescale(&mut self) -> RescaleOutcome {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &w in &self.shadow {
            min = min.min(w);
            max = max.max(w);
        }
        if max - min <= 1e-12 * max.abs().max(1.0) {
            return RescaleOutcome::Skipped;
        }
        let k = (self.config.w_max - self.config.w_min) / (max - min);
        let d = self.config.w_max - k * max;
        for w in &mut self.shadow {
            *w = if *w == max {
                self.config.w_max
            } else if *w == min {
                self.config.w_min
            } else {
                k * *w + d
            };
        }
        RescaleOutcome::Applied { k, d }
    }

    /// Runs one selection window for a state row.
    ///
    /// Every tick the state neuron (while its activity holds above threshold)
    /// emits a pulse that lands on action neuron `a` as `weight(s, a)` after
    /// `syn_delay` ticks. Each action spike, `syn_delay` ticks after firing,
    /// turns into a sustained unit of inhibition: `xi` per arrived spike per
    /// tick on unspiked action neurons, `zeta` per arrived spike per tick on
    /// the state neuron's activity. The window ends when no silent neuron
    /// can reach threshold any more, or at `select_timeout` ticks.
    ///
    /// The rng is touched only to break ties at the very end: a single
    /// spiker needs no draw, several spikers or a timeout take exactly one.
    pub fn select_action<R: Rng>(
        &self,
        s: usize,
        xi: f64,
        zeta: f64,
        rng: &mut R,
    ) -> Result<Selection> {
        if s >= self.n_states {
            return Err(Error::IndexOutOfRange(format!(
                "select_action state {s} on a {}-state crossbar",
                self.n_states
            )));
        }
        let cfg = &self.config;
        let n = self.n_actions;
        let decay = (-1.0 / cfg.tau_m).exp();
        let w: Vec<f64> = (0..n).map(|a| self.weight(s, a)).collect();

        let mut v = vec![cfg.v_reset; n];
        let mut spiked = vec![false; n];
        let mut spikers: Vec<usize> = Vec::new();
        let mut first_spike_tick = 0usize;

        // The state neuron fires on every tick of [0, stop); its pulses
        // arrive during [syn_delay, stop + syn_delay).
        let mut activity = STATE_ACTIVITY_MARGIN * cfg.v_thresh;
        let mut state_stop: Option<usize> = None;

        // Action-spike inhibition arrival ticks, discovered in order.
        let mut inhib_queue: std::collections::VecDeque<usize> = Default::default();
        let mut arrived = 0usize;

        for t in 0..cfg.select_timeout {
            while inhib_queue.front().is_some_and(|&due| due <= t) {
                inhib_queue.pop_front();
                arrived += 1;
            }
            let inhib = arrived as f64;

            // State neuron: fire first, then integrate the stop signal.
            if state_stop.is_none() {
                activity = activity * decay
                    + STATE_ACTIVITY_MARGIN * cfg.v_thresh * (1.0 - decay)
                    - zeta * inhib;
                if activity < cfg.v_thresh {
                    // Stops after this tick's pulse; it cannot recover, the
                    // pull target only moves down as more spikes arrive.
                    state_stop = Some(t + 1);
                }
            }

            let pulse_now = t >= cfg.syn_delay
                && state_stop.is_none_or(|stop| t < stop + cfg.syn_delay);
            let pulses_remain = state_stop.is_none_or(|stop| t + 1 < stop + cfg.syn_delay);

            let mut all_settled = true;
            for a in 0..n {
                if spiked[a] {
                    continue;
                }
                let drive = if pulse_now { w[a] } else { 0.0 };
                v[a] = v[a] * decay + drive - xi * inhib;
                if v[a] >= cfg.v_thresh {
                    spiked[a] = true;
                    if spikers.is_empty() {
                        first_spike_tick = t;
                    }
                    spikers.push(a);
                    inhib_queue.push_back(t + cfg.syn_delay);
                    continue;
                }
                // Best case looking forward: drive keeps flowing at full
                // weight (if any pulses can still arrive) and inhibition
                // never grows. If even that steady state sits below
                // threshold, this neuron is done.
                let best = (if pulses_remain { w[a] } else { 0.0 }) - xi * inhib;
                if best / (1.0 - decay) >= cfg.v_thresh {
                    all_settled = false;
                }
            }
            if all_settled && inhib_queue.is_empty() {
                break;
            }
        }

        Ok(match spikers.len() {
            0 => Selection {
                action: rng.random_range(0..n),
                case: SelectionCase::Timeout,
                latency: cfg.select_timeout,
                n_spikers: 0,
            },
            1 => Selection {
                action: spikers[0],
                case: SelectionCase::SingleSpike,
                latency: first_spike_tick,
                n_spikers: 1,
            },
            k => Selection {
                action: spikers[rng.random_range(0..k)],
                case: SelectionCase::MultiSpike,
                latency: first_spike_tick,
                n_spikers: k,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{stream, StreamRole};
    use rand::RngCore;

    fn bar_with(weights: Vec<f64>, config: EmulatorConfig) -> Crossbar {
        let n = weights.len();
        Crossbar::from_weights(1, n, config, weights).unwrap()
    }

    #[test]
    fn defaults_are_hardware_shaped() {
        let cfg = EmulatorConfig::default();
        assert_eq!(cfg.tau_m, 10.0);
        assert_eq!(cfg.v_thresh, 100.0);
        assert_eq!(cfg.syn_delay, 2);
        assert_eq!(cfg.select_timeout, 100);
        assert_eq!(cfg.quant, QuantMode::Bits(6));
        assert_eq!((cfg.w_min, cfg.w_max), (0.0, 63.0));
        assert_eq!(cfg.rescale_period, None);
        assert_eq!(cfg.init_band, (0.4, 0.6));
    }

    #[test]
    fn quantized_view_rounds_and_update_clamps() {
        let mut bar = bar_with(vec![25.4, 25.6], EmulatorConfig::default());
        assert_eq!(bar.weight(0, 0), 25.0);
        assert_eq!(bar.weight(0, 1), 26.0);
        bar.apply_update(0, 0, 1000.0);
        assert_eq!(bar.shadow(0, 0), 63.0);
        bar.apply_update(0, 0, -1000.0);
        assert_eq!(bar.shadow(0, 0), 0.0);
    }

    #[test]
    fn ideal_mode_keeps_raw_values() {
        let cfg = EmulatorConfig {
            quant: QuantMode::Ideal,
            ..Default::default()
        };
        let mut bar = bar_with(vec![25.4, -3.0], cfg);
        assert_eq!(bar.weight(0, 0), 25.4);
        assert_eq!(bar.weight(0, 1), -3.0);
        bar.apply_update(0, 1, -100.0);
        assert_eq!(bar.shadow(0, 1), -103.0);
    }

    #[test]
    fn fresh_weights_sit_in_the_init_band() {
        let mut rng = stream(8, StreamRole::Trial, &[0]);
        let bar = Crossbar::new(4, 4, EmulatorConfig::default(), &mut rng).unwrap();
        for &w in bar.shadow_weights() {
            assert!((25.2..37.8).contains(&w), "init weight {w}");
        }
    }

    #[test]
    fn capacity_guard_trips_only_in_quantized_mode() {
        let mut rng = stream(8, StreamRole::Trial, &[1]);
        let err = Crossbar::new(31, 2, EmulatorConfig::default(), &mut rng).unwrap_err();
        assert!(matches!(
            err,
            Error::CrossbarCapacity {
                n_states: 31,
                n_actions: 2,
                cap: 32,
            }
        ));
        let ideal = EmulatorConfig {
            quant: QuantMode::Ideal,
            ..Default::default()
        };
        assert!(Crossbar::new(31, 2, ideal, &mut rng).is_ok());
    }

    #[test]
    fn quantization_error_is_at_most_half_a_step() {
        for i in 0..=630 {
            let w = i as f64 * 0.1;
            let bar = bar_with(vec![w], EmulatorConfig::default());
            assert!((bar.weight(0, 0) - w).abs() <= 0.5 + 1e-12, "weight {w}");
        }
    }

    #[test]
    fn rescale_matches_the_affine_form() {
        let mut bar = bar_with(vec![10.0, 20.0, 30.0], EmulatorConfig::default());
        match bar.rescale() {
            RescaleOutcome::Applied { k, d } => {
                assert!((k - 3.15).abs() < 1e-12);
                assert!((d - -31.5).abs() < 1e-12);
            }
            RescaleOutcome::Skipped => panic!("rescale should apply"),
        }
        assert_eq!(bar.shadow(0, 0), 0.0);
        assert_eq!(bar.shadow(0, 1), 31.5);
        assert_eq!(bar.shadow(0, 2), 63.0);
    }

    #[test]
    fn degenerate_spread_is_skipped() {
        let mut bar = bar_with(vec![20.0, 20.0, 20.0], EmulatorConfig::default());
        assert_eq!(bar.rescale(), RescaleOutcome::Skipped);
        assert_eq!(bar.shadow(0, 1), 20.0);
    }

    #[test]
    fn rescale_preserves_orderings() {
        let mut rng = stream(8, StreamRole::Trial, &[2]);
        let mut bar = Crossbar::new(3, 5, EmulatorConfig::default(), &mut rng).unwrap();
        let before = bar.shadow_weights().to_vec();
        assert!(matches!(bar.rescale(), RescaleOutcome::Applied { .. }));
        let after = bar.shadow_weights();
        for i in 0..before.len() {
            for j in 0..before.len() {
                assert_eq!(
                    before[i] < before[j],
                    after[i] < after[j],
                    "ordering of entries {i} and {j} changed"
                );
            }
        }
    }

    #[test]
    fn strong_inhibition_gives_single_spike_argmax() {
        let bar = bar_with(vec![50.0, 25.0], EmulatorConfig::default());
        let mut rng = stream(8, StreamRole::Trial, &[3]);
        let sel = bar.select_action(0, 63.0, 0.0, &mut rng).unwrap();
        assert_eq!(sel.action, 0);
        assert_eq!(sel.case, SelectionCase::SingleSpike);
        assert_eq!(sel.n_spikers, 1);
    }

    #[test]
    fn single_spike_consumes_no_randomness() {
        let bar = bar_with(vec![50.0, 25.0], EmulatorConfig::default());
        let mut rng = stream(8, StreamRole::Trial, &[4]);
        let mut snap = rng.clone();
        let sel = bar.select_action(0, 63.0, 0.0, &mut rng).unwrap();
        assert_eq!(sel.case, SelectionCase::SingleSpike);
        assert_eq!(rng.next_u64(), snap.next_u64());
    }

    #[test]
    fn tie_break_touches_the_rng() {
        let bar = bar_with(vec![30.0, 30.0], EmulatorConfig::default());
        let mut rng = stream(8, StreamRole::Trial, &[5]);
        let mut snap = rng.clone();
        let sel = bar.select_action(0, 63.0, 0.0, &mut rng).unwrap();
        assert_eq!(sel.case, SelectionCase::MultiSpike);
        assert_eq!(sel.n_spikers, 2);
        assert_ne!(rng.next_u64(), snap.next_u64());
    }

    #[test]
    fn equal_weights_split_the_choice() {
        let bar = bar_with(vec![30.0, 30.0], EmulatorConfig::default());
        let mut rng = stream(8, StreamRole::Trial, &[6]);
        let mut seen = [false; 2];
        for _ in 0..100 {
            let sel = bar.select_action(0, 63.0, 0.0, &mut rng).unwrap();
            seen[sel.action] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn tiny_weights_time_out_uniformly() {
        // Steady state 5 / (1 - e^{-0.1}) ~ 52.5 never reaches 100.
        let bar = bar_with(vec![5.0, 5.0, 5.0], EmulatorConfig::default());
        let mut rng = stream(8, StreamRole::Trial, &[7]);
        let mut seen = [false; 3];
        for _ in 0..200 {
            let sel = bar.select_action(0, 63.0, 0.0, &mut rng).unwrap();
            assert_eq!(sel.case, SelectionCase::Timeout);
            assert_eq!(sel.latency, 100);
            seen[sel.action] = true;
        }
        assert_eq!(seen, [true, true, true]);
    }

    #[test]
    fn no_inhibition_lets_both_arms_spike() {
        let bar = bar_with(vec![30.0, 28.0], EmulatorConfig::default());
        let mut rng = stream(8, StreamRole::Trial, &[8]);
        let sel = bar.select_action(0, 0.0, 0.0, &mut rng).unwrap();
        assert_eq!(sel.case, SelectionCase::MultiSpike);
        assert_eq!(sel.n_spikers, 2);
    }

    #[test]
    fn zeta_cuts_the_drive_for_slow_neurons() {
        // Without feedback the weak neuron reaches threshold around tick 17;
        // with a strong stop signal the state neuron quits delivering pulses
        // shortly after the first spike arrives, so it never gets there.
        let bar = bar_with(vec![30.0, 12.0], EmulatorConfig::default());
        let mut rng = stream(8, StreamRole::Trial, &[9]);
        let lively = bar.select_action(0, 0.0, 0.0, &mut rng).unwrap();
        assert_eq!(lively.case, SelectionCase::MultiSpike);
        let stopped = bar.select_action(0, 0.0, 63.0, &mut rng).unwrap();
        assert_eq!(stopped.case, SelectionCase::SingleSpike);
        assert_eq!(stopped.action, 0);
    }

    #[test]
    fn latency_is_monotone_in_weight() {
        let mut prev = usize::MAX;
        for w in [15.0, 20.0, 30.0, 45.0, 63.0] {
            let bar = bar_with(vec![w], EmulatorConfig::default());
            let mut rng = stream(8, StreamRole::Trial, &[10]);
            let sel = bar.select_action(0, 63.0, 0.0, &mut rng).unwrap();
            assert_eq!(sel.case, SelectionCase::SingleSpike);
            assert!(
                sel.latency <= prev,
                "weight {w} spiked later than a smaller weight"
            );
            prev = sel.latency;
        }
    }

    #[test]
    fn selection_is_deterministic_given_the_stream() {
        let bar = bar_with(vec![30.0, 30.0, 28.0], EmulatorConfig::default());
        let run = |salt: u64| {
            let mut rng = stream(99, StreamRole::Trial, &[salt]);
            (0..50)
                .map(|_| bar.select_action(0, 10.0, 1.0, &mut rng).unwrap().action)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn multi_spike_rate_is_monotone_in_xi() {
        // Fresh random weights per draw, fixed during each selection; more
        // mutual inhibition can only shrink the set of co-spikers.
        let mut rng = stream(77, StreamRole::Trial, &[0]);
        let trials = 10_000;
        let mut rates = Vec::new();
        for xi in [0.0, 5.0, 15.0, 30.0, 63.0] {
            let mut weight_rng = stream(77, StreamRole::Trial, &[1]);
            let mut multi = 0usize;
            for _ in 0..trials {
                let w = vec![
                    weight_rng.random_range(0.0..63.0),
                    weight_rng.random_range(0.0..63.0),
                    weight_rng.random_range(0.0..63.0),
                ];
                let bar = bar_with(w, EmulatorConfig::default());
                let sel = bar.select_action(0, xi, 0.0, &mut rng).unwrap();
                if sel.case == SelectionCase::MultiSpike {
                    multi += 1;
                }
            }
            rates.push(multi as f64 / trials as f64);
        }
        for pair in rates.windows(2) {
            assert!(
                pair[1] <= pair[0] + 0.02,
                "multi-spike rate rose with xi: {rates:?}"
            );
        }
    }
}
