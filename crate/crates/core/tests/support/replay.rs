//! Line-by-line replay of the greedy and conservative selection listings,
//! written without touching the library's math so it can serve as an
//! oracle. Entropy and JSD are evaluated in natural logs and JSD goes
//! through the entropy identity `JS(p, q) = H(m) - (H(p) + H(q)) / 2`.

use std::f64::consts::LN_2;

pub fn entropy_bits(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    (term(p) + term(1.0 - p)) / LN_2
}

pub fn js_bits(p: f64, q: f64) -> f64 {
    let m = (p + q) / 2.0;
    (entropy_bits(m) - (entropy_bits(p) + entropy_bits(q)) / 2.0).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Greedy,
    Conservative,
}

#[derive(Debug, Clone, Copy)]
pub struct ReplayParams {
    pub beta: f64,
    pub eps_tol: f64,
    pub tau: f64,
    pub m_min: usize,
    pub square: bool,
    pub weighted: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayResult {
    /// Indices into the input pool, in acceptance order.
    pub chosen: Vec<usize>,
    pub p_hat: f64,
    pub u_epis: f64,
    pub u_alea: f64,
    pub u_total: f64,
}

fn u_epis(s: &[f64], square: bool) -> f64 {
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let mut acc = 0.0;
    for &p in s {
        let js = js_bits(p, mean);
        acc += if square { js * js } else { js };
    }
    acc / s.len() as f64
}

fn u_alea(s: &[f64]) -> f64 {
    s.iter().map(|&p| entropy_bits(p)).sum::<f64>() / s.len() as f64
}

pub fn replay(pool: &[f64], variant: Variant, prm: &ReplayParams) -> ReplayResult {
    // sort by confidence descending; stable, so ties keep pool order
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = ((pool[a] - 0.5).abs(), (pool[b] - 0.5).abs());
        cb.partial_cmp(&ca).unwrap()
    });

    let mut s_idx = vec![order[0]];
    let mut epis_prev = 0.0;
    let mut total_prev = f64::INFINITY;
    let mut last_accepted: Option<(f64, f64)> = None;

    for &j in &order[1..] {
        let mut candidate = s_idx.clone();
        candidate.push(j);
        let vals: Vec<f64> = candidate.iter().map(|&i| pool[i]).collect();
        let ue = u_epis(&vals, prm.square);
        let ua = u_alea(&vals);
        let stop = match variant {
            Variant::Greedy => vals.len() >= prm.m_min && ue - epis_prev > prm.eps_tol,
            Variant::Conservative => {
                let ut = ue + prm.beta * ua;
                vals.len() >= prm.m_min && ut > total_prev - prm.tau
            }
        };
        if stop {
            break;
        }
        s_idx = candidate;
        epis_prev = ue;
        total_prev = ue + prm.beta * ua;
        last_accepted = Some((ue, ua));
    }

    let vals: Vec<f64> = s_idx.iter().map(|&i| pool[i]).collect();
    let p_hat = if prm.weighted {
        let w: Vec<f64> = vals.iter().map(|&p| 1.0 - entropy_bits(p)).collect();
        let den: f64 = w.iter().sum();
        if den > 0.0 {
            vals.iter().zip(&w).map(|(p, w)| p * w).sum::<f64>() / den
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    let (ue, ua) = match variant {
        // returned uncertainties describe the returned subset
        Variant::Greedy => (epis_prev, u_alea(&vals)),
        Variant::Conservative => last_accepted.unwrap_or((0.0, entropy_bits(vals[0]))),
    };
    ReplayResult {
        chosen: s_idx,
        p_hat,
        u_epis: ue,
        u_alea: ua,
        u_total: ue + prm.beta * ua,
    }
}
