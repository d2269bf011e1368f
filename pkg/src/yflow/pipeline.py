"""End-to-end optimization: cost collection, layout DP, blocking sweep.

Costs are deterministic weighted instruction counts from the simulated
whole-layer CostReport (physical totals: steady + priming + drains),
not measured latencies.  Default weights charge memory traffic and the
reduction/move overheads, and treat lane-wise arithmetic as free:
loads=1, scalar reads/writes=1, vmov=1, vredsum=1, arithmetic=0.
"""

from dataclasses import dataclass, field

from .model import (ConfigError, DataflowSpec, VectorMachineConfig,
                    output_dims)
from .reuse import recommend
from .schedule import gen
from .simvm import count_report

DEFAULT_WEIGHTS = {"loads": 1, "scalar": 1, "vmov": 1, "vredsum": 1, "arith": 0}


@dataclass(frozen=True)
class Candidate:
    x: int              # channel block width (lanes per vector variable)
    spec: DataflowSpec

    @property
    def label(self):
        s = self.spec
        return "x%d-%s-i%dw%do%d" % (self.x, s.anchor, s.aux_input_vars,
                                     s.aux_weight_vars, s.aux_output_vars)


@dataclass
class NetworkSpec:
    layers: list        # LayerConfig, in order
    candidates: list    # per layer: nonempty list of Candidate

    def __post_init__(self):
        if len(self.layers) != len(self.candidates):
            raise ConfigError("need one candidate list per layer")
        if not self.layers:
            raise ConfigError("network has no layers")
        for i, cands in enumerate(self.candidates):
            if not cands:
                raise ConfigError("layer %d has an empty candidate set" % i)
        for i in range(len(self.layers) - 1):
            if self.layers[i].oc != self.layers[i + 1].ic:
                raise ConfigError(
                    "layer %d oc=%d does not feed layer %d ic=%d"
                    % (i, self.layers[i].oc, i + 1, self.layers[i + 1].ic))


def vmc_for_x(base, x):
    """Machine view with vec_var_bits chosen to give x lanes."""
    bits = x * base.elem_bits
    if bits % base.vec_reg_bits:
        raise ConfigError("x=%d needs vec_var_bits=%d, not a register multiple"
                          % (x, bits))
    return VectorMachineConfig(base.vec_reg_bits, bits, base.num_vec_regs,
                               base.elem_bits)


def weighted_cost(report, weights=None):
    """Scalar cost of a (whole-layer) CostReport under the weight vector."""
    w = dict(DEFAULT_WEIGHTS)
    if weights:
        w.update(weights)
    loads = report.vector_loads + report.prime_loads
    scalar = report.scalar_reads + report.scalar_writes + 2 * report.drain_sacc
    arith = (report.vmul + report.vadd + report.vxor + report.vpopcnt
             + report.vzero)
    return (w["loads"] * loads + w["scalar"] * scalar + w["vmov"] * report.vmov
            + w["vredsum"] * report.vredsum + w["arith"] * arith)


def simulate_cost(layer, base_vmc, cand, weights=None, mode="int8"):
    vmc = vmc_for_x(base_vmc, cand.x)
    cand.spec.validate(vmc)
    ir = gen(layer, vmc, cand.spec, mode=mode)
    return weighted_cost(count_report(ir).whole_layer(), weights)


def transform_cost(channels, h, w, x_from, x_to):
    """Element moves to re-block a (channels, h, w) activation tensor."""
    if x_from == x_to:
        return 0
    moves = 0
    if x_from != 1:
        moves += channels * h * w   # unpack to plain NCHW
    if x_to != 1:
        moves += channels * h * w   # pack into the new blocking
    return moves


@dataclass
class CostTable:
    net: NetworkSpec
    layer_costs: dict     # (layer_idx, cand_idx) -> cost
    trans_costs: dict     # (boundary_idx, cand_idx_a, cand_idx_b) -> cost

    def to_csv(self):
        lines = ["layer,config,cost"]
        for (li, ci) in sorted(self.layer_costs):
            lines.append("%d,%s,%d" % (li, self.net.candidates[li][ci].label,
                                       self.layer_costs[(li, ci)]))
        lines.append("boundary,layout_a,layout_b,cost")
        for (bi, ca, cb) in sorted(self.trans_costs):
            lines.append("%d,%s,%s,%d" % (bi, self.net.candidates[bi][ca].label,
                                          self.net.candidates[bi + 1][cb].label,
                                          self.trans_costs[(bi, ca, cb)]))
        return "\n".join(lines) + "\n"


def collect_costs(net, base_vmc, weights=None, mode="int8"):
    layer_costs = {}
    for li, layer in enumerate(net.layers):
        for ci, cand in enumerate(net.candidates[li]):
            try:
                layer_costs[(li, ci)] = simulate_cost(layer, base_vmc, cand,
                                                      weights, mode)
            except ConfigError as e:
                raise ConfigError("layer %d candidate %s: %s"
                                  % (li, cand.label, e)) from e
    trans_costs = {}
    for bi in range(len(net.layers) - 1):
        layer = net.layers[bi]
        oh, ow = output_dims(layer)
        for ca, cand_a in enumerate(net.candidates[bi]):
            for cb, cand_b in enumerate(net.candidates[bi + 1]):
                trans_costs[(bi, ca, cb)] = transform_cost(
                    layer.oc, oh, ow, cand_a.x, cand_b.x)
    return CostTable(net, layer_costs, trans_costs)


def layout_dp(table):
    """Min-cost per-layer candidate assignment over layer + boundary costs.

    Standard chain DP: state = candidate chosen for the previous layer.
    Returns (assignment index list, total cost).
    """
    net = table.net
    n = len(net.layers)
    ncand = [len(c) for c in net.candidates]
    best = {ci: table.layer_costs[(0, ci)] for ci in range(ncand[0])}
    back = []
    for li in range(1, n):
        nxt = {}
        arrows = {}
        for ci in range(ncand[li]):
            opts = [(best[pj] + table.trans_costs[(li - 1, pj, ci)], pj)
                    for pj in range(ncand[li - 1])]
            cost, pj = min(opts)
            nxt[ci] = cost + table.layer_costs[(li, ci)]
            arrows[ci] = pj
        best = nxt
        back.append(arrows)
    total, last = min((c, ci) for ci, c in best.items())
    assignment = [last]
    for arrows in reversed(back):
        assignment.append(arrows[assignment[-1]])
    assignment.reverse()
    return assignment, total


def blocking_sweep(layer, base_vmc, candidates, weights=None, mode="int8"):
    """Evaluate candidates on one layer; return (best, cost, all rows).

    rows: (cost, label, candidate) sorted by cost with deterministic
    tie-break (smaller x first, then weight-priority specs first).
    """
    if not candidates:
        raise ConfigError("blocking_sweep needs at least one candidate")
    rows = []
    for cand in candidates:
        cost = simulate_cost(layer, base_vmc, cand, weights, mode)
        pri = 0 if cand.spec.priority and cand.spec.priority[0] == "weight" else 1
        rows.append((cost, cand.x, pri, cand.label, cand))
    rows.sort(key=lambda r: r[:4])
    best = rows[0]
    return best[4], best[0], [(r[0], r[3], r[4]) for r in rows]


def default_candidates(layer, base_vmc):
    """x in {reg lanes x1, x2, x4} that fit the machine, basic OS and
    the recommended spec for each."""
    cands = []
    reg_lanes = base_vmc.vec_reg_bits // base_vmc.elem_bits
    for mult in (1, 2, 4):
        x = reg_lanes * mult
        try:
            vmc = vmc_for_x(base_vmc, x)
        except ConfigError:
            continue
        rec = recommend(vmc, layer)
        cands.append(Candidate(x, DataflowSpec("OS")))
        if rec.total_aux:
            cands.append(Candidate(x, rec))
    if not cands:
        raise ConfigError("no feasible blocking candidates for this machine")
    return cands
