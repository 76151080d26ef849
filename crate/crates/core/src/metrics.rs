//! Characterisation metrics derived from simulator counters.

use std::fmt::Write as _;

use crate::memsim::SimCounters;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MetricOptions {
    /// Divide L2 prefetches by L2 demand requests only, instead of by all
    /// L2 requests.
    pub prefetch_ratio_demand_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSet {
    /// Reuse-aware locality: L1 hits per off-chip line movement.
    pub ral: f64,
    /// L3-level accesses completed per L3-active cycle.
    pub l3_apc: f64,
    pub pipeline_stall_degree: f64,
    pub l2_beyond_active_degree: f64,
    /// Stall cycles per memory-active cycle. Not clamped to 1.
    pub latency_non_hidden_degree: f64,
    pub prefetch_request_ratio: f64,
    /// One instruction per trace record over total cycles. Model artefact.
    pub ipc_model: f64,
    /// Metrics whose denominator was zero and replaced by 1.
    pub guarded: Vec<&'static str>,
}

pub fn derive_metrics(s: &SimCounters) -> MetricSet {
    derive_metrics_with(s, MetricOptions::default())
}

pub fn derive_metrics_with(s: &SimCounters, opts: MetricOptions) -> MetricSet {
    let mut guarded = Vec::new();
    let mut ratio = |name: &'static str, num: u64, den: u64| {
        if den == 0 {
            guarded.push(name);
        }
        num as f64 / den.max(1) as f64
    };
    let l2_pf = s.l2.prefetch_requests;
    let pf_den = if opts.prefetch_ratio_demand_only {
        s.l2.demand_requests
    } else {
        s.l2.demand_requests + l2_pf
    };
    MetricSet {
        ral: ratio("ral", s.l1.hits, s.offchip_movements),
        l3_apc: ratio("l3_apc", s.l3_accesses_completed, s.l3_active_cycles),
        pipeline_stall_degree: ratio("pipeline_stall_degree", s.stall_cycles, s.total_cycles),
        l2_beyond_active_degree: ratio("l2_beyond_active_degree", s.l2_beyond_active_cycles, s.mem_active_cycles),
        latency_non_hidden_degree: ratio("latency_non_hidden_degree", s.stall_cycles, s.mem_active_cycles),
        prefetch_request_ratio: ratio("prefetch_request_ratio", l2_pf, pf_den),
        ipc_model: ratio("ipc_model", s.records, s.total_cycles),
        guarded,
    }
}

impl MetricSet {
    pub fn values(&self) -> [(&'static str, f64); 7] {
        [
            ("ral", self.ral),
            ("l3_apc", self.l3_apc),
            ("pipeline_stall_degree", self.pipeline_stall_degree),
            ("l2_beyond_active_degree", self.l2_beyond_active_degree),
            ("latency_non_hidden_degree", self.latency_non_hidden_degree),
            ("prefetch_request_ratio", self.prefetch_request_ratio),
            ("ipc_model", self.ipc_model),
        ]
    }

    /// `metric,value` lines; guarded metrics are listed on a final
    /// `guarded,<name;name>` line when present.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (name, v) in self.values() {
            let _ = writeln!(out, "{name},{v:.6}");
        }
        if !self.guarded.is_empty() {
            let _ = writeln!(out, "guarded,{}", self.guarded.join(";"));
        }
        out
    }
}
