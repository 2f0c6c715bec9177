use serde::{Deserialize, Serialize};

/// One plant's bid into a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Offer {
    pub id: usize,
    pub srmc: f64,
    pub available_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispatch {
    /// Aligned with the offers as given.
    pub dispatch_mw: Vec<f64>,
    /// SRMC of the last dispatched plant; 0 when nothing runs.
    pub clearing_price: f64,
    pub marginal: Option<usize>,
    pub unserved_mw: f64,
}

impl Dispatch {
    pub fn dispatched_mw(&self) -> f64 {
        self.dispatch_mw.iter().sum()
    }
}

/// Greedy merit-order fill: cheapest SRMC first, ties to the lower id.
pub fn merit_order_dispatch(offers: &[Offer], demand_mw: f64) -> Dispatch {
    let mut order: Vec<usize> = (0..offers.len()).collect();
    order.sort_by(|&a, &b| offers[a].srmc.total_cmp(&offers[b].srmc).then(offers[a].id.cmp(&offers[b].id)));
    let mut dispatch_mw = vec![0.0; offers.len()];
    let mut remaining = demand_mw.max(0.0);
    let mut clearing_price = 0.0;
    let mut marginal = None;
    for i in order {
        if remaining <= 0.0 {
            break;
        }
        let d = offers[i].available_mw.max(0.0).min(remaining);
        if d > 0.0 {
            dispatch_mw[i] = d;
            remaining -= d;
            clearing_price = offers[i].srmc;
            marginal = Some(offers[i].id);
        }
    }
    Dispatch { dispatch_mw, clearing_price, marginal, unserved_mw: remaining }
}
