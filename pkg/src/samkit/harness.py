"""Strategy runner: solve a sequence of systems under a preconditioner policy.

A strategy decides, per system, whether to factor a fresh preconditioner,
compute a map back to the current reference matrix, or reuse whatever
operator is already in hand.  Every fresh factorization resets the reference
pair, so maps always target the most recently factored matrix.
"""

import configparser
import io
import time
from dataclasses import dataclass, field

import numpy as np

from . import ilutp, patterns, sam
from .gmres import GmresConfig, gmres
from .problems import SequenceSpec, point_source_rhs, talbot_shifts, fem_pair_2d, matrix_market_read
from .sparse import as_csc

RECOMPUTE = "prec"
COMPUTE_SAM = "sam"
REUSE = "reuse"
_ACTIONS = (RECOMPUTE, COMPUTE_SAM, REUSE)


@dataclass(frozen=True)
class Strategy:
    """Per-system preconditioner policy.

    ``events`` maps explicit indices to actions; systems without an event
    reuse the current operator.  Index 0 must always recompute, since a
    sequence has to start from a real preconditioner.
    """

    kind: str
    events: tuple = ()

    def __post_init__(self):
        if self.kind not in ("recompute_every", "reuse_first", "sam_every", "events"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "events":
            if not self.events:
                raise ValueError("events strategy needs at least one event")
            idx = [e[0] for e in self.events]
            if idx[0] != 0 or self.events[0][1] != RECOMPUTE:
                raise ValueError("the first event must recompute the preconditioner at index 0")
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError("event indices must be strictly increasing")
            for _, act in self.events:
                if act not in _ACTIONS:
                    raise ValueError(f"unknown action {act!r}")
        elif self.events:
            raise ValueError(f"strategy {self.kind!r} does not take events")

    @classmethod
    def recompute_every(cls):
        return cls("recompute_every")

    @classmethod
    def reuse_first(cls):
        return cls("reuse_first")

    @classmethod
    def sam_every(cls):
        return cls("sam_every")

    @classmethod
    def at_events(cls, events):
        return cls("events", tuple((int(i), str(a)) for i, a in events))

    def action(self, k: int) -> str:
        if self.kind == "recompute_every":
            return RECOMPUTE
        if self.kind == "reuse_first":
            return RECOMPUTE if k == 0 else REUSE
        if self.kind == "sam_every":
            return RECOMPUTE if k == 0 else COMPUTE_SAM
        for i, act in self.events:
            if i == k:
                return act
        return REUSE


@dataclass
class SystemRecord:
    index: int
    shift: complex
    prec_event: str
    prec_seconds: float
    sam_rel_residual: float | None
    gmres_seconds: float
    iterations: int
    converged: bool
    final_rel_residual: float


@dataclass
class SequenceReport:
    rows: list = field(default_factory=list)

    @property
    def total_prec_seconds(self):
        return sum(r.prec_seconds for r in self.rows)

    @property
    def total_gmres_seconds(self):
        return sum(r.gmres_seconds for r in self.rows)

    @property
    def total_iterations(self):
        return sum(r.iterations for r in self.rows)

    @property
    def total_wall_seconds(self):
        return self.total_prec_seconds + self.total_gmres_seconds


def resolve_pattern(choice, A_ref) -> patterns.SparsityPattern:
    """Turn a pattern choice into a concrete pattern for the reference matrix.

    Accepts a SparsityPattern directly, or one of the string forms
    ``ref``, ``diag``, ``tridiag``, ``power:P``, ``sparsified:P:TAU``,
    ``offsets:o1,o2,...``, ``file:PATH``.
    """
    if isinstance(choice, patterns.SparsityPattern):
        return choice
    if not isinstance(choice, str):
        raise TypeError("pattern choice must be a SparsityPattern or a string")
    n = A_ref.shape[0]
    name, _, arg = choice.partition(":")
    if name == "ref":
        return patterns.pattern_of(A_ref)
    if name == "diag":
        return patterns.offset_pattern(n, [0])
    if name == "tridiag":
        return patterns.offset_pattern(n, [-1, 0, 1])
    if name == "power":
        return patterns.symbolic_power(patterns.pattern_of(A_ref), int(arg))
    if name == "sparsified":
        p, tau = arg.split(":")
        return patterns.sparsified_power(A_ref, int(p), float(tau))
    if name == "offsets":
        return patterns.offset_pattern(n, [int(tok) for tok in arg.split(",")])
    if name == "file":
        return patterns.read_pattern(arg)
    raise ValueError(f"unknown pattern choice {choice!r}")


def run_sequence(spec: SequenceSpec, strategy: Strategy, ilutp_params: ilutp.IlutpParams,
                 pattern_choice, gmres_config: GmresConfig,
                 on_factor_failure: str = "fallback", sam_workers: int = 1) -> SequenceReport:
    """Solve every system of the sequence in order under the given strategy.

    Factorization failures after the first system are recorded and, under the
    default policy, the previous operator is kept so the run continues; pass
    ``on_factor_failure="abort"`` to raise instead.
    """
    if on_factor_failure not in ("fallback", "abort"):
        raise ValueError("on_factor_failure must be 'fallback' or 'abort'")
    b = spec.rhs
    report = SequenceReport()

    A_ref = None
    P_ref = None
    current = None
    current_plan = None

    for k, A_k in enumerate(spec.matrices):
        A_k = as_csc(A_k)
        act = strategy.action(k)
        if k == 0 and act != RECOMPUTE:
            raise ValueError("a sequence must start by computing a preconditioner")
        event = act
        sam_rel = None
        t0 = time.perf_counter()
        if act == RECOMPUTE:
            try:
                P_ref = ilutp.factor(A_k, ilutp_params)
                A_ref = A_k
                current = P_ref
                current_plan = None
            except ilutp.FactorizationError:
                if k == 0 or on_factor_failure == "abort":
                    raise
                event = "prec_failed"
        elif act == COMPUTE_SAM:
            if current_plan is None:
                S = resolve_pattern(pattern_choice, A_ref)
                current_plan = sam.plan(S, A_k, include_rhs_rows=True, A_ref=A_ref)
            mapped = sam.compute_map(A_k, A_ref, current_plan, workers=sam_workers)
            current = sam.compose(mapped.N, P_ref)
            sam_rel = mapped.rel_residual
        prec_seconds = time.perf_counter() - t0

        x, solve = gmres(A_k, b, M=current, config=gmres_config)
        report.rows.append(SystemRecord(
            index=k,
            shift=complex(spec.shifts[k]),
            prec_event=event,
            prec_seconds=prec_seconds,
            sam_rel_residual=sam_rel,
            gmres_seconds=solve.wall_seconds,
            iterations=solve.iterations,
            converged=solve.converged,
            final_rel_residual=solve.final_rel_residual,
        ))
    return report


CSV_COLUMNS = ("index", "shift_re", "shift_im", "prec_event", "prec_seconds",
               "sam_rel_residual", "gmres_seconds", "iterations", "converged",
               "final_rel_residual")


def render_report(report: SequenceReport, format: str = "csv") -> str:
    if format == "csv":
        return _render_csv(report)
    if format == "markdown":
        return _render_markdown(report)
    raise ValueError(f"unknown report format {format!r}")


def _render_csv(report):
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in report.rows:
        sam_res = "" if r.sam_rel_residual is None else repr(r.sam_rel_residual)
        out.write(",".join([
            str(r.index), repr(r.shift.real), repr(r.shift.imag), r.prec_event,
            repr(r.prec_seconds), sam_res, repr(r.gmres_seconds),
            str(r.iterations), str(r.converged).lower(), repr(r.final_rel_residual),
        ]) + "\n")
    out.write(",".join([
        "totals", "", "", "", repr(report.total_prec_seconds), "",
        repr(report.total_gmres_seconds), str(report.total_iterations), "", "",
    ]) + "\n")
    return out.getvalue()


def _render_markdown(report):
    head = ("| system | shift | event | prec (s) | map relres | gmres (s) | iter | converged |",
            "|---|---|---|---|---|---|---|---|")
    lines = list(head)
    for r in report.rows:
        shift = f"{r.shift.real:.4g}" if r.shift.imag == 0 else f"{r.shift.real:.4g}{r.shift.imag:+.4g}i"
        sam_res = "" if r.sam_rel_residual is None else f"{r.sam_rel_residual:.3e}"
        lines.append(
            f"| {r.index} | {shift} | {r.prec_event} | {r.prec_seconds:.3f} | {sam_res} "
            f"| {r.gmres_seconds:.3f} | {r.iterations} | {str(r.converged).lower()} |")
    lines.append(
        f"| totals |  |  | {report.total_prec_seconds:.3f} |  "
        f"| {report.total_gmres_seconds:.3f} | {report.total_iterations} |  |")
    return "\n".join(lines) + "\n"


# --- config files -------------------------------------------------------

_SECTION_KEYS = {
    "sequence": {"kind", "nx", "ny", "delta_s", "count", "k_file", "m_file",
                 "files", "shifts", "shift_file", "n_z", "t", "talbot_constants", "rhs"},
    "strategy": {"kind", "events"},
    "ilutp": {"lfil", "droptol", "pivtol"},
    "pattern": {"kind", "p", "tau", "offsets", "path"},
    "gmres": {"restart", "rel_tol", "max_total_iters", "reorthogonalize"},
}


class ConfigError(ValueError):
    pass


def _require(section, key, cfg):
    if key not in cfg:
        raise ConfigError(f"missing required key {section}.{key}")
    return cfg[key]


def _parse_shifts(seq):
    if "shifts" in seq:
        if "shift_file" in seq or "n_z" in seq:
            raise ConfigError("sequence: give only one of shifts, shift_file, n_z/t")
        pairs = [tok for tok in seq["shifts"].replace(";", " ").split()]
        if len(pairs) % 2 != 0:
            raise ConfigError("sequence.shifts: expected pairs of 're im' values")
        vals = [float(tok) for tok in pairs]
        return np.array([complex(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)])
    if "shift_file" in seq:
        out = []
        with open(seq["shift_file"]) as fh:
            for line in fh:
                toks = line.split()
                if not toks:
                    continue
                if len(toks) != 2:
                    raise ConfigError(f"shift file line {line.strip()!r}: expected 're im'")
                out.append(complex(float(toks[0]), float(toks[1])))
        return np.array(out)
    n_z = int(seq.get("n_z", "40"))
    t = float(seq.get("t", "60"))
    if "talbot_constants" in seq:
        consts = tuple(float(tok) for tok in seq["talbot_constants"].split())
        if len(consts) != 4:
            raise ConfigError("sequence.talbot_constants: four values required")
    else:
        consts = None
    return talbot_shifts(n_z, t) if consts is None else talbot_shifts(n_z, t, consts)


def _parse_rhs(seq, n):
    src = seq.get("rhs", "point")
    if src == "point":
        return point_source_rhs(n)
    if src == "ones":
        return np.ones(n) / np.sqrt(n)
    if src.startswith("file:"):
        vec = np.loadtxt(src[len("file:"):], ndmin=1)
        if vec.shape[0] != n:
            raise ConfigError(f"rhs file has length {vec.shape[0]}, systems have size {n}")
        return vec
    raise ConfigError(f"sequence.rhs: unknown source {src!r}")


def _parse_events(text):
    body = text.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise ConfigError("strategy.events: expected a bracketed list like [0:prec, 15:sam]")
    events = []
    for item in body[1:-1].split(","):
        item = item.strip()
        if not item:
            continue
        idx, _, act = item.partition(":")
        try:
            events.append((int(idx), act.strip()))
        except ValueError:
            raise ConfigError(f"strategy.events: bad item {item!r}") from None
    return events


def parse_config(path):
    """Read a run description: (spec, strategy, ilutp params, pattern, gmres config)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    for section in cp.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in cp[section]:
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"unknown key {section}.{key}")
    if "sequence" not in cp:
        raise ConfigError("missing required section [sequence]")

    seq = cp["sequence"]
    kind = _require("sequence", "kind", seq)
    if kind == "helmholtz_sweep":
        spec = SequenceSpec.helmholtz(
            nx=int(seq.get("nx", "10")), ny=int(seq.get("ny", "10")),
            delta_s=float(seq.get("delta_s", "0.01")), count=int(seq.get("count", "200")))
    elif kind == "shifted_pair":
        if "k_file" in seq or "m_file" in seq:
            K = matrix_market_read(_require("sequence", "k_file", seq))
            M = matrix_market_read(_require("sequence", "m_file", seq))
        else:
            K, M = fem_pair_2d(int(seq.get("nx", "32")), int(seq.get("ny", "32")))
        shifts = _parse_shifts(seq)
        spec = SequenceSpec.shifted_pair(K, M, shifts, rhs=_parse_rhs(seq, K.shape[0]))
    elif kind == "matrix_files":
        files = _require("sequence", "files", seq).split()
        spec = SequenceSpec.matrix_files(files)
        if "rhs" in seq:
            spec = SequenceSpec(spec.kind, spec.matrices, spec.shifts, _parse_rhs(seq, spec.n))
    else:
        raise ConfigError(f"sequence.kind: unknown kind {kind!r}")

    st = cp["strategy"] if "strategy" in cp else {}
    st_kind = st.get("kind", "sam_every")
    try:
        if st_kind == "events":
            strategy = Strategy.at_events(_parse_events(_require("strategy", "events", st)))
        else:
            if "events" in st:
                raise ConfigError(f"strategy.events conflicts with kind={st_kind}")
            strategy = Strategy(st_kind)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"strategy: {exc}") from None

    il = cp["ilutp"] if "ilutp" in cp else {}
    params = ilutp.IlutpParams(
        lfil=int(il.get("lfil", "20")),
        droptol=float(il.get("droptol", "1e-3")),
        pivtol=float(il.get("pivtol", "1.0")))

    pt = cp["pattern"] if "pattern" in cp else {}
    pkind = pt.get("kind", "ref")
    if pkind == "power":
        pattern_choice = f"power:{pt.get('p', '2')}"
    elif pkind == "sparsified":
        pattern_choice = f"sparsified:{pt.get('p', '2')}:{pt.get('tau', '1e-4')}"
    elif pkind == "offsets":
        pattern_choice = f"offsets:{_require('pattern', 'offsets', pt)}"
    elif pkind == "file":
        pattern_choice = f"file:{_require('pattern', 'path', pt)}"
    elif pkind in ("ref", "diag", "tridiag"):
        pattern_choice = pkind
    else:
        raise ConfigError(f"pattern.kind: unknown kind {pkind!r}")

    gm = cp["gmres"] if "gmres" in cp else {}
    max_iters = int(gm.get("max_total_iters", "100"))
    restart_raw = gm.get("restart", "full")
    restart = max_iters if restart_raw == "full" else int(restart_raw)
    gmres_config = GmresConfig(
        restart=restart,
        rel_tol=float(gm.get("rel_tol", "1e-10")),
        max_total_iters=max_iters,
        reorthogonalize=gm.get("reorthogonalize", "false").lower() in ("1", "true", "yes"))

    return spec, strategy, params, pattern_choice, gmres_config
