use spconv_core::analytic::s_closed_form;
use spconv_core::calibration::stationary_rates;
use spconv_core::measurement::{compensate_transmittance, estimate_routing_efficiencies, Measured};
use spconv_core::pipeline::{monte_carlo_conversion, run_simulation, RunControls, SimulationConfig};
use spconv_core::source::SlotGenerator;
use spconv_core::{ConverterConfig, ConverterParams, RngStream, SourceConfig, SourceParams, Strategy};

fn source(pair: f64, eff: f64, dead: u32, ratio: f64, multi: bool) -> SourceConfig {
    SourceConfig {
        pair_prob: pair,
        herald_det_efficiency: eff,
        herald_deadtime_ns: None,
        herald_deadtime_slots: Some(dead),
        herald_splitter_ratio: ratio,
        multi_pair_enabled: multi,
        ..Default::default()
    }
}

/// Dense Gaussian elimination, partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for (off, row) in rest.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[col + 1 + off] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Herald fraction from the exact stationary law of the two blind counters,
/// enumerating photon outcomes per slot (so double pairs are covered too).
fn herald_fraction_oracle(cfg: &SourceConfig) -> f64 {
    let d = cfg.herald_deadtime_slots.unwrap() as usize;
    let (q, e, r) = (cfg.pair_prob, cfg.herald_det_efficiency, cfg.herald_splitter_ratio);
    // per photon: (hit A, hit B, nothing)
    let single = [r * e, (1.0 - r) * e, 1.0 - e];
    // (P(A hit), P(B hit), P(both)) given a pair
    let p_double = if cfg.multi_pair_enabled { q } else { 0.0 };
    let mut hit = [[0.0; 2]; 2];
    for (i, pi) in single.iter().enumerate() {
        let w1 = (1.0 - p_double) * pi;
        hit[usize::from(i == 0)][usize::from(i == 1)] += w1;
        for (k, pk) in single.iter().enumerate() {
            let w2 = p_double * pi * pk;
            hit[usize::from(i == 0 || k == 0)][usize::from(i == 1 || k == 1)] += w2;
        }
    }
    let m = d + 1;
    let idx = |a: usize, b: usize| a * m + b;
    let next = |blind: usize, fire: bool| if fire { d } else { blind.saturating_sub(1) };
    let size = m * m;
    let mut trans = vec![vec![0.0; size]; size];
    let mut fire_prob = vec![0.0; size];
    for a in 0..m {
        for b in 0..m {
            let from = idx(a, b);
            let mut add = |ha: bool, hb: bool, w: f64| {
                let fa = ha && a == 0;
                let fb = hb && b == 0;
                if fa || fb {
                    fire_prob[from] += w;
                }
                trans[from][idx(next(a, fa), next(b, fb))] += w;
            };
            add(false, false, 1.0 - q);
            for (ha, row) in hit.iter().enumerate() {
                for (hb, &w) in row.iter().enumerate() {
                    add(ha == 1, hb == 1, q * w);
                }
            }
        }
    }
    // pi (P - I) = 0 with sum(pi) = 1
    let mut a = vec![vec![0.0; size]; size];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = trans[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[size - 1] = vec![1.0; size];
    let mut rhs = vec![0.0; size];
    rhs[size - 1] = 1.0;
    let pi = solve(a, rhs);
    pi.iter().zip(&fire_prob).map(|(p, f)| p * f).sum()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn herald_fraction_matches_markov_oracle() {
    let cases = [
        source(0.3, 0.8, 4, 0.4, false),
        source(0.3, 0.8, 4, 0.4, true),
        source(0.05, 0.31, 4, 0.5, false),
        source(0.6, 1.0, 2, 0.7, true),
        source(0.2, 0.5, 0, 0.5, false),
    ];
    for (c, cfg) in cases.iter().enumerate() {
        let params = SourceParams::try_from(cfg).unwrap();
        let batches: Vec<f64> = (0..20)
            .map(|b| {
                let slots = 100_000;
                let k = SlotGenerator::new(params, slots, RngStream::new(77, (c * 100 + b) as u64).rng())
                    .filter(|r| r.herald_effective())
                    .count();
                k as f64 / slots as f64
            })
            .collect();
        let (m, se) = mean_se(&batches);
        let oracle = herald_fraction_oracle(cfg);
        assert!((m - oracle).abs() < 5.0 * se, "case {c}: {m} ± {se} vs {oracle}");
        if !cfg.multi_pair_enabled {
            let chain = stationary_rates(&params, 2).herald_fraction;
            assert!((chain - oracle).abs() < 1e-9, "case {c}: chain {chain} vs {oracle}");
        }
    }
}

#[test]
fn oracle_reduces_to_independent_slots_without_deadtime() {
    let cfg = source(0.2, 0.5, 0, 0.3, false);
    assert!((herald_fraction_oracle(&cfg) - 0.1).abs() < 1e-12);
}

#[test]
fn misroutes_are_uniform_over_other_ports() {
    let n = 4;
    let params = ConverterParams::uniform(Strategy::ActiveHeralded, n, 1.0, 0.4).unwrap();
    let counter = monte_carlo_conversion(&params, 1.0, 200_000, RngStream::new(12, 0)).unwrap();
    // 99.9 % point of chi-square with 2 degrees of freedom
    let critical = 13.82;
    for (j, row) in counter.routing.counts.iter().enumerate() {
        let others: Vec<f64> = (0..n).filter(|&k| k != j).map(|k| row[k] as f64).collect();
        let expect = others.iter().sum::<f64>() / others.len() as f64;
        let chi2: f64 = others.iter().map(|o| (o - expect).powi(2) / expect).sum();
        assert!(chi2 < critical, "photon {j}: chi2 = {chi2}");
    }
}

fn clocked_fixture(slots: u64, seed: u64) -> SimulationConfig {
    SimulationConfig {
        source: SourceConfig {
            signal_det_efficiency: 0.6,
            ..source(0.1, 0.9, 0, 0.5, false)
        },
        converter: ConverterConfig {
            n_modes: 2,
            strategy: Strategy::ActiveClocked,
            transmittance: 1.0,
            port_efficiencies: vec![0.9, 0.9],
        },
        run: RunControls {
            seed,
            slots,
            trials: 1,
            ..Default::default()
        },
    }
}

#[test]
fn estimator_spread_scales_as_inverse_sqrt_slots() {
    let lengths = [200_000u64, 800_000, 3_200_000];
    let mut spreads = Vec::new();
    let mut reported = Vec::new();
    for &slots in &lengths {
        let runs: Vec<_> = (0..24)
            .map(|seed| run_simulation(&clocked_fixture(slots, seed)).unwrap().s_estimate)
            .collect();
        let xs: Vec<f64> = runs.iter().map(|e| e.value).collect();
        let (_, se) = mean_se(&xs);
        // spread of single runs, not of their mean
        spreads.push(se * (xs.len() as f64).sqrt());
        reported.push(runs.iter().map(|e| e.std_error).sum::<f64>() / runs.len() as f64);
    }
    let x: Vec<f64> = lengths.iter().map(|&l| (l as f64).ln()).collect();
    let y: Vec<f64> = spreads.iter().map(|s| s.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / 3.0, y.iter().sum::<f64>() / 3.0);
    let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() < 0.15, "slope {slope}, spreads {spreads:?}");

    // the propagated error follows the same law and tracks the real spread
    let ratio = reported[0] / reported[2];
    assert!((ratio - 4.0).abs() < 0.6, "reported ratio {ratio}");
    for (r, s) in reported.iter().zip(&spreads) {
        assert!((r / s - 1.0).abs() < 0.4, "reported {r} vs spread {s}");
    }
}

#[test]
fn pipeline_estimate_matches_closed_form_for_each_strategy() {
    for strategy in Strategy::ALL {
        let eta = 0.85;
        let cfg = SimulationConfig {
            source: source(0.08, 0.7, 3, 0.5, false),
            converter: ConverterConfig {
                n_modes: 2,
                strategy,
                transmittance: 1.0,
                port_efficiencies: vec![eta; 2],
            },
            run: RunControls {
                seed: 5,
                slots: 2_000_000,
                trials: 4,
                ..Default::default()
            },
        };
        let r = run_simulation(&cfg).unwrap();
        let truth = s_closed_form(strategy, 2, eta).unwrap();
        let s = r.s_estimate;
        assert!((s.value - truth).abs() < 4.0 * s.std_error, "{strategy}: {} ± {} vs {truth}", s.value, s.std_error);
    }
}

#[test]
fn transmittance_compensation_recovers_lossless_efficiency() {
    let t = 0.6;
    let cfg = SimulationConfig {
        source: source(0.1, 0.8, 2, 0.5, false),
        converter: ConverterConfig {
            n_modes: 2,
            strategy: Strategy::ActiveHeralded,
            transmittance: t,
            port_efficiencies: vec![1.0; 2],
        },
        run: RunControls {
            seed: 9,
            slots: 2_000_000,
            trials: 4,
            ..Default::default()
        },
    };
    let r = run_simulation(&cfg).unwrap();
    let comp = compensate_transmittance(r.s_estimate, Measured::exact(t), 2).unwrap();
    assert!((comp.value - 1.0).abs() < 4.0 * comp.std_error, "{comp:?}");
    assert!((r.s_estimate.value - t * t).abs() < 4.0 * r.s_estimate.std_error);
}

#[test]
fn routing_efficiencies_recovered_from_routing_table() {
    let cfg = ConverterConfig {
        n_modes: 3,
        strategy: Strategy::ActiveHeralded,
        transmittance: 0.7,
        port_efficiencies: vec![0.95, 0.8, 0.6],
    };
    let params = ConverterParams::try_from(&cfg).unwrap();
    let counter = monte_carlo_conversion(&params, 0.5, 300_000, RngStream::new(3, 0)).unwrap();
    let est = estimate_routing_efficiencies(&counter.routing, &[1.0; 3]).unwrap();
    for (m, truth) in est.iter().zip(&cfg.port_efficiencies) {
        assert!((m.value - truth).abs() < 4.0 * m.std_error, "{m:?} vs {truth}");
    }
}
