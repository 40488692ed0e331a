"""
Attack batteries and the seven-property security table.

Each adversary role is run as a full election and judged against the property
it threatens. Properties no selected attack exercises are judged on an honest
baseline run of the same scenario. Every verdict points at the trace line that
supports it.
"""

import math
from collections.abc import Callable

from loguru import logger

from qvote.config import settings
from qvote.domain.exceptions import IncompleteChain
from qvote.models.config import (
    AdversaryRole,
    AdversarySpec,
    CommitmentMode,
    CommitmentParams,
    ScenarioConfig,
    voter_id,
)
from qvote.models.ledger import RecordKind, RejectionReason
from qvote.models.report import (
    AbortReason,
    AttackResult,
    AuditVerdict,
    MonteCarloEstimate,
    SecurityProperty,
    SecurityReport,
    SecurityVerdict,
    VerdictStatus,
)
from qvote.services.anonymity import (
    MAX_EXHAUSTIVE_VOTERS,
    anonymity_audit,
    sampled_anonymity_audit,
)
from qvote.services.commitment import create_commitment_scheme
from qvote.services.masking import Modulus, column_of, gen_mask_matrix, mask_ballot
from qvote.services.protocol import ElectionRun, run_election, self_tally
from qvote.services.trace import verify_trace
from qvote.utils.rng import Stream, make_rng

SUITES: dict[str, AdversaryRole] = {
    "double-vote": AdversaryRole.DUPLICATE_VOTER,
    "rebind": AdversaryRole.REBINDER,
    "early-open": AdversaryRole.EARLY_OPENER,
    "tamper": AdversaryRole.TAMPERER,
    "collude": AdversaryRole.COLLUDER_SET,
    "withhold": AdversaryRole.WITHHOLD_OPENING,
    "outsider": AdversaryRole.OUTSIDER,
    "impersonate": AdversaryRole.IMPERSONATOR,
}

ROLE_PROPERTY: dict[AdversaryRole, SecurityProperty] = {
    AdversaryRole.DUPLICATE_VOTER: SecurityProperty.NON_REUSABILITY,
    AdversaryRole.REBINDER: SecurityProperty.BINDING,
    AdversaryRole.TAMPERER: SecurityProperty.BINDING,
    AdversaryRole.IMPERSONATOR: SecurityProperty.BINDING,
    AdversaryRole.EARLY_OPENER: SecurityProperty.FAIRNESS,
    AdversaryRole.OUTSIDER: SecurityProperty.ELIGIBILITY,
    AdversaryRole.COLLUDER_SET: SecurityProperty.ANONYMITY,
    AdversaryRole.WITHHOLD_OPENING: SecurityProperty.SELF_TALLYING,
}

# Standard errors an early opener may sit above the blind-guess rate
GUESS_MARGIN_SIGMAS = 4.0


def _verdict(
    prop: SecurityProperty,
    ok: bool,
    evidence: str,
    status: VerdictStatus | None = None,
) -> SecurityVerdict:
    resolved: VerdictStatus = status or ("pass" if ok else "fail")
    return SecurityVerdict(property=prop, passed=ok, status=resolved, evidence=evidence)


def _ref(label: str, line: int | None) -> str:
    return f"{label}:trace#{line}" if line is not None else label


def _tally_correct(run: ElectionRun) -> bool:
    return not run.report.aborted and run.report.tally == sum(run.votes)


def _rejections(run: ElectionRun, sender: str, reason: RejectionReason) -> list[int]:
    return [
        r.trace_line
        for r in run.report.rounds
        if r.sender == sender and r.reason is reason
    ]


def _guesses_blindly(estimate: MonteCarloEstimate) -> bool:
    p = estimate.expected
    margin = GUESS_MARGIN_SIGMAS * math.sqrt(p * (1 - p) / estimate.trials)
    return estimate.observed <= p + margin


def _audit(config: ScenarioConfig, colluders: tuple[int, ...]) -> AuditVerdict:
    if config.n_voters <= MAX_EXHAUSTIVE_VOTERS:
        return anonymity_audit(config.n_voters, colluders)
    return sampled_anonymity_audit(config.n_voters, colluders, seed=config.seed)


def _audit_verdict(audit: AuditVerdict, label: str) -> SecurityVerdict:
    return _verdict(
        SecurityProperty.ANONYMITY,
        audit.passed,
        f"{label}:audit:{audit.mode}:{audit.matrices_enumerated}",
        audit.status,
    )


# ============================================================================
# ROLE VERDICTS
# ============================================================================


def _judge(
    config: ScenarioConfig, adversary: AdversarySpec, run: ElectionRun
) -> list[SecurityVerdict]:
    report = run.report
    role = adversary.role
    actor = voter_id(adversary.voter)
    label = role.value
    prop = ROLE_PROPERTY[role]

    if role is AdversaryRole.REBINDER:
        line = run.evidence.get("rebind")
        caught = (
            report.aborted
            and report.abort_reason is AbortReason.CHEAT_DETECTED
            and actor in report.culprits
        )
        if caught or _tally_correct(run):
            return [_verdict(prop, True, _ref(label, line))]
        guaranteed = create_commitment_scheme(
            config.commitment_params, Modulus(config.n_voters)
        ).binding_guaranteed
        status: VerdictStatus = "fail" if guaranteed else "not guaranteed"
        return [_verdict(prop, False, _ref(label, line), status)]

    if role is AdversaryRole.TAMPERER:
        line = run.evidence.get("delivery_failure")
        ok = report.delivery_failures > 0 and _tally_correct(run)
        return [_verdict(prop, ok, _ref(label, line))]

    if role is AdversaryRole.IMPERSONATOR:
        lines = _rejections(run, actor, RejectionReason.AUTH_FAILURE)
        ok = bool(lines) and _tally_correct(run)
        return [_verdict(prop, ok, _ref(label, lines[0] if lines else None))]

    if role is AdversaryRole.DUPLICATE_VOTER:
        lines = _rejections(run, actor, RejectionReason.DUPLICATE_BALLOT)
        ok = len(lines) == 2 and _tally_correct(run)
        return [_verdict(prop, ok, _ref(label, lines[0] if lines else None))]

    if role is AdversaryRole.EARLY_OPENER:
        line = run.evidence.get("peek")
        if config.commitment_mode is CommitmentMode.IDEAL:
            estimate = early_opener_accuracy(
                config.n_voters,
                config.commitment_params,
                trials=settings.fairness_trials,
                seed=config.seed,
            )
            evidence = f"{_ref(label, line)}:accuracy:{estimate.observed:.3f}"
            return [_verdict(prop, _guesses_blindly(estimate), evidence)]
        if config.p_detect == 0.0:
            return [_verdict(prop, False, _ref(label, line), "not guaranteed")]
        flagged = {
            e.detail.split()[0] for e in report.cheat_events if e.kind == "peek"
        }
        ok = len(flagged) == config.n_voters
        return [_verdict(prop, ok, _ref(label, line))]

    if role is AdversaryRole.OUTSIDER:
        lines = _rejections(run, adversary.outsider_id, RejectionReason.NOT_ELIGIBLE)
        admitted = [
            r for r in report.rounds if r.sender == adversary.outsider_id and r.admitted
        ]
        try:
            outsider_tally: int | None = self_tally(run.chain, config.n_voters)
        except IncompleteChain:
            outsider_tally = None
        ok = bool(lines) and not admitted and outsider_tally == report.tally
        return [_verdict(prop, ok, _ref(label, lines[0] if lines else None))]

    if role is AdversaryRole.COLLUDER_SET:
        colluders = adversary.colluders or (adversary.voter,)
        return [_audit_verdict(_audit(config, colluders), label)]

    if role is AdversaryRole.WITHHOLD_OPENING:
        line = run.evidence.get("abort")
        ok = (
            report.aborted
            and report.abort_reason is AbortReason.WITHHELD_OPENING
            and report.culprits == [actor]
        )
        return [_verdict(prop, ok, _ref(label, line))]

    raise ValueError(f"Unsupported adversary role: {role}")


def run_attack(config: ScenarioConfig, adversary: AdversarySpec) -> AttackResult:
    """
    Run one election with an adversary and judge the property it targets.

    Args:
        config: Scenario (its own adversary is replaced)
        adversary: Adversary to inject

    Returns:
        AttackResult; adversarial runs always produce a report
    """
    run = run_election(config.with_adversary(adversary))
    return AttackResult(report=run.report, verdicts=_judge(config, adversary, run))


# ============================================================================
# BASELINE
# ============================================================================


def baseline_verdicts(
    config: ScenarioConfig, run: ElectionRun
) -> list[SecurityVerdict]:
    """
    Judge all seven properties on an honest run.

    Args:
        config: Scenario without adversary
        run: Its election run

    Returns:
        One verdict per SecurityProperty
    """
    report = run.report
    roster = set(config.voter_ids)
    tally_line = run.evidence.get("tally")
    evidence = _ref("honest", tally_line)
    records = [(block.height, r) for block in run.chain for r in block.records]

    binding_guaranteed = not (
        config.commitment_mode is CommitmentMode.CHEAT_SENSITIVE
        and config.p_detect == 0.0
    )
    binding = (
        _verdict(SecurityProperty.BINDING, _tally_correct(run), evidence)
        if binding_guaranteed
        else _verdict(SecurityProperty.BINDING, False, evidence, "not guaranteed")
    )

    seen: set[tuple[str, RecordKind]] = set()
    reused = False
    for _, record in records:
        key = (record.voter, record.kind)
        reused = reused or key in seen
        seen.add(key)

    replay = verify_trace(run.trace)
    verifiable = (
        replay.ok
        and replay.tally == report.tally
        and all(s.committed and s.opened for s in report.inclusion)
    )

    commit_heights = [h for h, r in records if r.kind is RecordKind.BALLOT_COMMITMENT]
    open_heights = [h for h, r in records if r.kind is RecordKind.BALLOT_OPENING]
    ordered = not open_heights or max(commit_heights) <= min(open_heights)
    fairness = (
        _verdict(SecurityProperty.FAIRNESS, ordered, evidence)
        if binding_guaranteed
        else _verdict(SecurityProperty.FAIRNESS, False, evidence, "not guaranteed")
    )

    try:
        recomputed: int | None = self_tally(run.chain, config.n_voters)
    except IncompleteChain:
        recomputed = None

    return [
        _audit_verdict(_audit(config, ()), "honest"),
        binding,
        _verdict(SecurityProperty.NON_REUSABILITY, not reused, evidence),
        _verdict(
            SecurityProperty.VERIFIABILITY,
            verifiable,
            _ref("honest", replay.first_bad_line or tally_line),
        ),
        _verdict(
            SecurityProperty.ELIGIBILITY,
            all(r.voter in roster for _, r in records),
            evidence,
        ),
        fairness,
        _verdict(
            SecurityProperty.SELF_TALLYING,
            recomputed is not None
            and recomputed == report.tally == sum(run.votes),
            evidence,
        ),
    ]


# ============================================================================
# SUITE
# ============================================================================


def default_adversary(config: ScenarioConfig, role: AdversaryRole) -> AdversarySpec:
    """The scenario's own adversary if it plays this role, else a default one."""
    if config.adversary is not None and config.adversary.role is role:
        return config.adversary
    if role is AdversaryRole.COLLUDER_SET:
        return AdversarySpec(role=role, colluders=(1,))
    return AdversarySpec(role=role)


def _roles_for(suite: str, config: ScenarioConfig) -> list[AdversaryRole]:
    if suite == "all":
        roles = list(SUITES.values())
    elif suite in SUITES:
        roles = [SUITES[suite]]
    else:
        raise ValueError(
            f"Unknown attack suite {suite!r}; expected 'all' or one of "
            f"{', '.join(SUITES)}"
        )
    if config.n_voters < 2 and AdversaryRole.IMPERSONATOR in roles:
        logger.warning("Impersonation needs two voters; skipped")
        roles.remove(AdversaryRole.IMPERSONATOR)
    return roles


def _merge(prop: SecurityProperty, verdicts: list[SecurityVerdict]) -> SecurityVerdict:
    if len(verdicts) == 1:
        return verdicts[0]
    failing = [v for v in verdicts if not v.passed]
    status = failing[0].status if failing else verdicts[0].status
    return SecurityVerdict(
        property=prop,
        passed=not failing,
        status=status,
        evidence=";".join(v.evidence for v in verdicts),
    )


def run_security_suite(
    config: ScenarioConfig,
    suite: str = "all",
    on_run: Callable[[str, ElectionRun], None] | None = None,
) -> SecurityReport:
    """
    Run an attack suite and build the seven-row security table.

    Args:
        config: Scenario
        suite: "all" or one role name from SUITES
        on_run: Called with (label, run) for every election executed

    Returns:
        SecurityReport with one verdict per property, in table order

    Raises:
        ValueError: If the suite is unknown
    """
    roles = _roles_for(suite, config)
    honest_config = config.with_adversary(None)
    honest = run_election(honest_config)
    if on_run:
        on_run("honest", honest)
    baseline = {v.property: v for v in baseline_verdicts(honest_config, honest)}

    attacked: dict[SecurityProperty, list[SecurityVerdict]] = {}
    for role in roles:
        adversary = default_adversary(config, role)
        run = run_election(config.with_adversary(adversary))
        if on_run:
            on_run(role.value, run)
        for verdict in _judge(config, adversary, run):
            attacked.setdefault(verdict.property, []).append(verdict)
        logger.info(f"Attack {role.value} judged")

    verdicts = [
        _merge(prop, attacked[prop]) if prop in attacked else baseline[prop]
        for prop in SecurityProperty
    ]
    return SecurityReport(suite=suite, seed=config.seed, verdicts=verdicts)


# ============================================================================
# MONTE-CARLO ESTIMATES
# ============================================================================


def early_opener_accuracy(
    n: int, params: CommitmentParams, trials: int | None = None, seed: int = 0
) -> MonteCarloEstimate:
    """
    How often a miner peeking at every commitment guesses the tally exactly.

    The expectation is the blind-guess baseline 1/(n+1); an Ideal scheme must
    stay close to it, a CheatSensitive one reaches 1 at the cost of detection.

    Args:
        n: Voter count
        params: Commitment backend
        trials: Number of simulated elections (defaults to settings.stat_trials)
        seed: Seed

    Returns:
        MonteCarloEstimate(observed accuracy, expected 1/(n+1))
    """
    trials = trials or settings.stat_trials
    modulus = Modulus(n)
    rng = make_rng(seed, Stream.ANALYSIS, n)
    hits = 0
    for _ in range(trials):
        scheme = create_commitment_scheme(params, modulus)
        votes = [int(v) for v in rng.integers(0, 2, size=n)]
        rows = gen_mask_matrix(n, rng)
        guesses = 0
        for i, vote in enumerate(votes, start=1):
            ballot = mask_ballot(vote, column_of(rows, i), modulus)
            commitment, _ = scheme.commit(voter_id(i), ballot.value, rng)
            guess, _ = scheme.adversarial_peek(commitment, rng, "M1")
            guesses += guess
        hits += int(guesses % modulus.value == sum(votes))
    return MonteCarloEstimate(
        observed=hits / trials, expected=1 / modulus.value, trials=trials
    )


def rebind_detection_rate(
    params: CommitmentParams,
    flipped_bits: int,
    trials: int | None = None,
    seed: int = 0,
) -> MonteCarloEstimate:
    """
    Frequency with which a rebind flipping k bits is detected.

    Args:
        params: Commitment backend; bit_width must be at least flipped_bits
        flipped_bits: Number of committed bits the forged opening changes
        trials: Number of rebind attempts (defaults to settings.stat_trials)
        seed: Seed

    Returns:
        MonteCarloEstimate(observed rate, expected 1-(1-p)^k)
    """
    if not 1 <= flipped_bits <= params.bit_width:
        raise ValueError(f"flipped_bits must be in 1..{params.bit_width}")
    trials = trials or settings.stat_trials
    modulus = Modulus((1 << params.bit_width) - 1)
    scheme = create_commitment_scheme(params, modulus)
    rng = make_rng(seed, Stream.ANALYSIS, flipped_bits)
    target = (1 << flipped_bits) - 1
    detected = 0
    for trial in range(trials):
        commitment, _ = scheme.commit(f"V{trial}", 0, rng)
        _, events = scheme.adversarial_rebind(commitment, target, rng)
        detected += int(bool(events))
    if params.mode is CommitmentMode.IDEAL:
        expected = 1.0
    else:
        expected = 1 - (1 - params.p_detect) ** flipped_bits
    return MonteCarloEstimate(
        observed=detected / trials, expected=expected, trials=trials
    )
