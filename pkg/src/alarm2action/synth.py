"""Synthetic alarm/response corpora with known ground truth.

Every fault type owns an ordered alarm cascade. A generated fault plays
its cascade (exponential inter-arrival delays), may chatter (duplicate
alarms 1-59 s after the original), may escalate into an alarm flood
(>= 10 alarms inside 10 minutes, forced by construction), and ends in a
maintenance response labelled with the fault's repair action. False
alarms arrive independently and map to nothing.

Generation is deterministic per (seed, turbine): each turbine draws from
its own seeded stream, so corpora are reproducible and turbines could be
generated in parallel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .ingest import AlarmEvent, ResponseEvent, write_event_csv

BASE_TIME = datetime(2024, 1, 6, 0, 0, 0, tzinfo=timezone.utc)

FLOOD_WINDOW_S = 600.0    # >= FLOOD_MIN_ALARMS inside this span counts as a flood
FLOOD_MIN_ALARMS = 10
FLOOD_BUILD_SPAN_S = 540.0  # floods are packed tighter than the window they must satisfy
CHATTER_GAP_RANGE_S = (1.0, 59.0)
RESPONSE_DELAY_MEAN_S = 600.0
RESPONSE_DELAY_CAP_S = 3600.0
END_MARGIN_S = 2 * 3600.0 + FLOOD_WINDOW_S

FALSE_ALARM_TEXTS = (
    "communication warning",
    "grid voltage dip",
    "wind gust warning",
    "remote reset notice",
    "data logger restart",
)


@dataclass(frozen=True)
class CascadeStep:
    text: str
    mean_delay_s: float = 30.0

    def __post_init__(self):
        if not self.text.strip():
            raise InvalidSpec("cascade step text must be non-empty")
        if self.mean_delay_s < 0:
            raise InvalidSpec("mean_delay_s must be >= 0")


@dataclass(frozen=True)
class FaultType:
    name: str
    repair_label: str
    cascade: tuple[CascadeStep, ...]

    def __post_init__(self):
        if not self.cascade:
            raise InvalidSpec(f"fault {self.name!r} has an empty cascade")

    @property
    def cascade_texts(self) -> list[str]:
        return [step.text for step in self.cascade]


@dataclass(frozen=True)
class ScenarioSpec:
    fault_types: tuple[FaultType, ...]
    n_turbines: int = 4
    days: int = 60
    fault_rate: float = 6.0          # expected faults per turbine per 30 days
    chatter_prob: float = 0.0
    false_alarm_rate: float = 0.0    # expected false alarms per turbine per day
    flood_prob: float = 0.0
    label_ambiguity: float = 0.0     # fraction of fault types sharing a cascade suffix
    seed: int = 0

    def __post_init__(self):
        if len(self.fault_types) < 2:
            raise InvalidSpec("need at least 2 fault types")
        names = [f.name for f in self.fault_types]
        if len(set(names)) != len(names):
            raise InvalidSpec("fault type names must be unique")
        if self.n_turbines < 1:
            raise InvalidSpec("n_turbines must be >= 1")
        if self.days < 1:
            raise InvalidSpec("days must be >= 1")
        for name in ("chatter_prob", "flood_prob", "label_ambiguity"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidSpec(f"{name} must be in [0, 1], got {v}")
        for name in ("fault_rate", "false_alarm_rate"):
            if getattr(self, name) < 0:
                raise InvalidSpec(f"{name} must be >= 0")

    @property
    def horizon_s(self) -> float:
        return self.days * 86400.0

    @property
    def labels(self) -> list[str]:
        return sorted({f.repair_label for f in self.fault_types})


@dataclass
class GroundTruth:
    turbine_id: str
    fault: str
    label: str
    onset: datetime
    response_time: datetime
    flood: bool
    alarm_times: list[datetime] = field(default_factory=list)


@dataclass
class CorpusBundle:
    spec: ScenarioSpec
    alarms: dict[str, list[AlarmEvent]]
    responses: dict[str, list[ResponseEvent]]
    ground_truth: list[GroundTruth]
    n_chatter: int = 0
    n_false: int = 0

    @property
    def n_faults(self) -> int:
        return len(self.ground_truth)

    @property
    def n_floods(self) -> int:
        return sum(1 for g in self.ground_truth if g.flood)


def _at(seconds: float) -> datetime:
    return BASE_TIME + timedelta(seconds=seconds)


def _play_fault(
    fault: FaultType, onset_s: float, flood: bool, rng: np.random.Generator
) -> tuple[list[tuple[float, str]], float]:
    """Alarm (time_s, text) pairs for one fault occurrence, plus last time."""
    texts = fault.cascade_texts
    if flood:
        n_alarms = max(FLOOD_MIN_ALARMS, len(texts))
        offsets = np.sort(rng.uniform(0.0, FLOOD_BUILD_SPAN_S, size=n_alarms - 1))
        times = [onset_s] + [onset_s + float(off) for off in offsets]
        played = [(times[i], texts[i % len(texts)]) for i in range(n_alarms)]
    else:
        t = onset_s
        played = []
        for k, step in enumerate(fault.cascade):
            if k > 0:
                t += float(rng.exponential(step.mean_delay_s))
            played.append((t, step.text))
    return played, played[-1][0]


def _generate_turbine(
    spec: ScenarioSpec, turbine_id: str, rng: np.random.Generator
) -> tuple[list[AlarmEvent], list[ResponseEvent], list[GroundTruth], int, int]:
    alarms: list[tuple[float, str]] = []
    responses: list[tuple[float, str]] = []
    truths: list[GroundTruth] = []
    n_chatter = 0

    latest_onset = spec.horizon_s - END_MARGIN_S
    expected_faults = spec.fault_rate * spec.days / 30.0
    n_faults = int(rng.poisson(expected_faults))
    onsets = np.sort(rng.uniform(0.0, max(latest_onset, 1.0), size=n_faults))

    for onset_s in onsets:
        fault = spec.fault_types[int(rng.integers(len(spec.fault_types)))]
        flood = bool(rng.random() < spec.flood_prob)
        played, last_s = _play_fault(fault, float(onset_s), flood, rng)

        fault_alarm_times = []
        for t, text in played:
            alarms.append((t, text))
            fault_alarm_times.append(_at(t))
            if rng.random() < spec.chatter_prob:
                gap = float(rng.uniform(*CHATTER_GAP_RANGE_S))
                alarms.append((t + gap, text))
                n_chatter += 1

        delay = min(float(rng.exponential(RESPONSE_DELAY_MEAN_S)),
                    RESPONSE_DELAY_CAP_S)
        response_s = last_s + delay
        responses.append((response_s, fault.repair_label))
        truths.append(GroundTruth(
            turbine_id=turbine_id,
            fault=fault.name,
            label=fault.repair_label,
            onset=_at(float(onset_s)),
            response_time=_at(response_s),
            flood=flood,
            alarm_times=fault_alarm_times,
        ))

    n_false = int(rng.poisson(spec.false_alarm_rate * spec.days))
    for _ in range(n_false):
        t = float(rng.uniform(0.0, spec.horizon_s))
        text = FALSE_ALARM_TEXTS[int(rng.integers(len(FALSE_ALARM_TEXTS)))]
        alarms.append((t, text))

    alarms.sort(key=lambda pair: pair[0])
    responses.sort(key=lambda pair: pair[0])
    alarm_events = [AlarmEvent(turbine_id, _at(t), text) for t, text in alarms]
    response_events = [ResponseEvent(turbine_id, _at(t), text)
                       for t, text in responses]
    return alarm_events, response_events, truths, n_chatter, n_false


def generate_corpus(spec: ScenarioSpec) -> CorpusBundle:
    """Generate per-turbine alarm and response streams plus ground truth."""
    alarms: dict[str, list[AlarmEvent]] = {}
    responses: dict[str, list[ResponseEvent]] = {}
    truths: list[GroundTruth] = []
    n_chatter = 0
    n_false = 0
    for idx in range(spec.n_turbines):
        turbine_id = f"T{idx + 1:02d}"
        rng = np.random.default_rng([spec.seed, idx])
        a, r, t, c, f = _generate_turbine(spec, turbine_id, rng)
        alarms[turbine_id] = a
        responses[turbine_id] = r
        truths.extend(t)
        n_chatter += c
        n_false += f
    truths.sort(key=lambda g: (g.turbine_id, g.response_time))
    return CorpusBundle(spec=spec, alarms=alarms, responses=responses,
                        ground_truth=truths, n_chatter=n_chatter, n_false=n_false)


# ---------------------------------------------------------------------------
# Scenario factories


def _component_cascade(component: str, n_steps: int) -> tuple[CascadeStep, ...]:
    symptoms = ("temperature high", "vibration warning", "pressure deviation",
                "speed mismatch", "current imbalance", "oil level low")
    steps = [CascadeStep(f"{component} {symptoms[k % len(symptoms)]}")
             for k in range(n_steps - 1)]
    steps.append(CascadeStep(f"{component} trip"))
    return tuple(steps)


COMPONENTS = ("gearbox", "generator", "pitch system", "yaw drive", "converter",
              "hydraulic unit", "brake system", "cooling fan", "lubrication pump",
              "anemometer", "transformer", "blade heater")


def learnable_scenario(
    num_classes: int = 8,
    n_turbines: int = 40,
    days: int = 60,
    fault_rate: float = 10.0,
    seed: int = 0,
) -> ScenarioSpec:
    """A corpus whose fault-to-cascade mapping is bijective and noise-free."""
    if num_classes > len(COMPONENTS):
        raise InvalidSpec(f"at most {len(COMPONENTS)} distinct fault classes")
    faults = tuple(
        FaultType(
            name=f"{COMPONENTS[i]} fault",
            repair_label=f"replace {COMPONENTS[i]}",
            cascade=_component_cascade(COMPONENTS[i], n_steps=3 + (i % 3)),
        )
        for i in range(num_classes)
    )
    return ScenarioSpec(fault_types=faults, n_turbines=n_turbines, days=days,
                        fault_rate=fault_rate, seed=seed)


def ambiguous_scenario(
    num_pairs: int = 4,
    n_turbines: int = 30,
    days: int = 60,
    fault_rate: float = 10.0,
    suffix_len: int = 4,
    seed: int = 0,
) -> ScenarioSpec:
    """Fault pairs that share their cascade suffix and differ only earlier.

    The shared tail means the alarms closest to the response are identical
    within a pair; only the two leading alarms identify the true fault, so
    context from the far end of the window carries the signal.
    """
    if num_pairs < 1:
        raise InvalidSpec("need at least one fault pair")
    if num_pairs * 2 > len(COMPONENTS):
        raise InvalidSpec(f"at most {len(COMPONENTS) // 2} fault pairs")
    faults = []
    for p in range(num_pairs):
        shared = tuple(
            CascadeStep(f"drivetrain stage {p + 1} alert {k + 1}")
            for k in range(suffix_len)
        )
        for variant in range(2):
            component = COMPONENTS[p * 2 + variant]
            prefix = (
                CascadeStep(f"{component} early warning"),
                CascadeStep(f"{component} deviation detected"),
            )
            faults.append(FaultType(
                name=f"{component} fault",
                repair_label=f"replace {component}",
                cascade=prefix + shared,
            ))
    return ScenarioSpec(fault_types=tuple(faults), n_turbines=n_turbines,
                        days=days, fault_rate=fault_rate,
                        label_ambiguity=1.0, seed=seed)


# ---------------------------------------------------------------------------
# Brute-force verification and statistics


def _is_subsequence(needle: list[str], haystack: list[str]) -> bool:
    it = iter(haystack)
    return all(any(x == h for h in it) for x in needle)


def verify_corpus(bundle: CorpusBundle, mem_days: int = 20) -> list[str]:
    """Exhaustively re-check the generator's promises; return violations.

    For every ground-truth response the fault's full cascade must appear,
    in order, among that turbine's alarms inside the memory window; every
    flood-tagged fault must have >= 10 of its alarms inside some
    10-minute span.
    """
    problems: list[str] = []
    by_name = {f.name: f for f in bundle.spec.fault_types}
    window = timedelta(days=mem_days)

    for truth in bundle.ground_truth:
        fault = by_name.get(truth.fault)
        if fault is None:
            problems.append(f"{truth.turbine_id}: unknown fault {truth.fault!r}")
            continue
        events = bundle.alarms.get(truth.turbine_id, [])
        in_window = [
            ev.text for ev in events
            if truth.response_time - window <= ev.time_on <= truth.response_time
        ]
        if not _is_subsequence(fault.cascade_texts, in_window):
            problems.append(
                f"{truth.turbine_id}@{truth.response_time.isoformat()}: "
                f"cascade of {truth.fault!r} not found in window"
            )
        if truth.flood:
            times = sorted(truth.alarm_times)
            ok = any(
                sum(1 for t in times
                    if 0 <= (t - start).total_seconds() <= FLOOD_WINDOW_S)
                >= FLOOD_MIN_ALARMS
                for start in times
            )
            if not ok:
                problems.append(
                    f"{truth.turbine_id}@{truth.response_time.isoformat()}: "
                    f"flood tag without {FLOOD_MIN_ALARMS} alarms "
                    f"in {FLOOD_WINDOW_S:.0f} s"
                )
    return problems


def corpus_stats(bundle: CorpusBundle) -> dict:
    spec = bundle.spec
    n_alarms = sum(len(v) for v in bundle.alarms.values())
    turbine_days = spec.n_turbines * spec.days
    return {
        "turbines": spec.n_turbines,
        "days": spec.days,
        "faults": bundle.n_faults,
        "expected_faults": spec.fault_rate * spec.days / 30.0 * spec.n_turbines,
        "floods": bundle.n_floods,
        "chatter_events": bundle.n_chatter,
        "false_alarms": bundle.n_false,
        "alarms": n_alarms,
        "alarms_per_day": n_alarms / turbine_days,
        "responses": sum(len(v) for v in bundle.responses.values()),
        "labels": spec.labels,
    }


# ---------------------------------------------------------------------------
# Serialization


def spec_to_dict(spec: ScenarioSpec) -> dict:
    return {
        "fault_types": [
            {
                "name": f.name,
                "repair_label": f.repair_label,
                "cascade": [
                    {"text": s.text, "mean_delay_s": s.mean_delay_s}
                    for s in f.cascade
                ],
            }
            for f in spec.fault_types
        ],
        "n_turbines": spec.n_turbines,
        "days": spec.days,
        "fault_rate": spec.fault_rate,
        "chatter_prob": spec.chatter_prob,
        "false_alarm_rate": spec.false_alarm_rate,
        "flood_prob": spec.flood_prob,
        "label_ambiguity": spec.label_ambiguity,
        "seed": spec.seed,
    }


def spec_from_dict(data: dict) -> ScenarioSpec:
    try:
        faults = tuple(
            FaultType(
                name=f["name"],
                repair_label=f["repair_label"],
                cascade=tuple(
                    CascadeStep(text=s["text"],
                                mean_delay_s=float(s.get("mean_delay_s", 30.0)))
                    for s in f["cascade"]
                ),
            )
            for f in data["fault_types"]
        )
        return ScenarioSpec(
            fault_types=faults,
            n_turbines=int(data.get("n_turbines", 4)),
            days=int(data.get("days", 60)),
            fault_rate=float(data.get("fault_rate", 6.0)),
            chatter_prob=float(data.get("chatter_prob", 0.0)),
            false_alarm_rate=float(data.get("false_alarm_rate", 0.0)),
            flood_prob=float(data.get("flood_prob", 0.0)),
            label_ambiguity=float(data.get("label_ambiguity", 0.0)),
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpec(f"bad scenario spec: {exc}") from exc


def load_scenario(path) -> ScenarioSpec:
    return spec_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_scenario(path, spec: ScenarioSpec) -> None:
    Path(path).write_text(
        json.dumps(spec_to_dict(spec), indent=2) + "\n", encoding="utf-8"
    )


def write_corpus(bundle: CorpusBundle, out_dir) -> None:
    """Emit per-turbine CSVs (ingest format), ground truth and the scenario."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for turbine_id, events in bundle.alarms.items():
        write_event_csv(out / f"alarms_{turbine_id}.csv", events)
    for turbine_id, events in bundle.responses.items():
        write_event_csv(out / f"responses_{turbine_id}.csv", events)
    truth_rows = [
        {
            "turbine_id": g.turbine_id,
            "fault": g.fault,
            "label": g.label,
            "onset": g.onset.isoformat(),
            "response_time": g.response_time.isoformat(),
            "flood": g.flood,
            "alarm_times": [t.isoformat() for t in g.alarm_times],
        }
        for g in bundle.ground_truth
    ]
    (out / "ground_truth.json").write_text(
        json.dumps(truth_rows, indent=2) + "\n", encoding="utf-8"
    )
    save_scenario(out / "scenario.json", bundle.spec)
