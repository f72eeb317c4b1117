"""Reference placement algorithms simulated under the same message accounting.

Four classics for comparison runs: one-shot Greedy (contact d bins, commit
where your request queued earliest, measure how many balls sit past a load
cap), its multi-round variant (fixed d bins, one acceptance per bin per
round), the 3-round adaptive retry variant on 2+2 bins, and the collision
protocol in which bins invite every still-uncommitted contact once they can
accommodate all of them.

All four return the same ``SimOutcome`` shape as the family simulator:
``requests_sent`` counts ball-to-bin messages (initial contacts, plus
withdrawal notices for the collision protocol), ``responses_sent`` counts
bin-to-ball messages (answers / acceptances / invitations), and
``messages_total`` adds commit messages (one per placed ball; one per ball
for the one-shot variant, which commits before the cap is measured).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from binload.model import (
    InvariantViolation,
    SimOutcome,
    SimRoundRecord,
    ValidationError,
)


class Baseline(enum.Enum):
    GREEDY_ONESHOT = "greedy-oneshot"
    GREEDY_MULTIROUND = "greedy-multiround"
    H_RETRY = "h-retry"
    STEMANN = "stemann"


@dataclass(frozen=True)
class BaselineConfig:
    algorithm: Baseline
    n: int
    d: int = 2
    load_cap: int = 3
    rounds: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        if self.d < 1:
            raise ValidationError(f"d must be >= 1, got {self.d}")
        if self.load_cap < 1:
            raise ValidationError(f"load_cap must be >= 1, got {self.load_cap}")
        if self.rounds < 1:
            raise ValidationError(f"rounds must be >= 1, got {self.rounds}")


def _require(cfg: BaselineConfig, algorithm: Baseline) -> None:
    if cfg.algorithm is not algorithm:
        raise ValidationError(
            f"config names {cfg.algorithm.value!r}, not {algorithm.value!r}"
        )


def _histogram(loads: np.ndarray, cap: int) -> tuple[int, ...]:
    return tuple(int(c) for c in np.bincount(loads, minlength=cap + 1))


def _check_conservation(loads: np.ndarray, remaining: int, n: int) -> None:
    placed = int(loads.sum())
    if placed + remaining != n:
        raise InvariantViolation(
            f"{placed} placed + {remaining} remaining != {n} balls"
        )


def greedy_oneshot(cfg: BaselineConfig) -> SimOutcome:
    """One round trip: contact d bins, commit where the request queued first.

    Each request joins its bin's queue at a uniformly random position and the
    bin answers with that position; the ball commits to the contacted bin
    where its position is smallest (first index on the rare exact tie — the
    contacted bins are exchangeable, so the break is unbiased).  Placement
    itself is cap-free.  Afterwards every ball is ranked by queue position
    among the balls that committed to the same bin, and the ones ranked past
    ``load_cap`` count as remaining — the cap is a measurement, not a rule
    the protocol can react to.  The ledger is d requests + d responses per
    ball plus one commit message from every ball (committing happens before
    the cap is applied), while ``commits_total`` counts only balls that fit.
    """
    _require(cfg, Baseline.GREEDY_ONESHOT)
    n, d, cap = cfg.n, cfg.d, cfg.load_cap
    rng = np.random.default_rng(cfg.seed)
    total = n * d
    dest = rng.integers(0, n, size=total, dtype=np.int64)
    bin_bits = max(1, (n - 1).bit_length())
    tie_bits = 63 - bin_bits
    key = (dest << tie_bits) | rng.integers(0, 1 << tie_bits, size=total, dtype=np.int64)
    order = np.argsort(key, kind="stable")
    sorted_dest = dest[order]
    first = np.ones(total, dtype=bool)
    first[1:] = sorted_dest[1:] != sorted_dest[:-1]
    run_id = np.cumsum(first) - 1
    run_start = np.flatnonzero(first)
    pos = np.empty(total, dtype=np.int64)
    pos[order] = np.arange(total, dtype=np.int64) - run_start[run_id]
    pos = pos.reshape(n, d)
    pick = pos.argmin(axis=1)
    rows = np.arange(n)
    chosen = dest.reshape(n, d)[rows, pick]
    chosen_pos = pos[rows, pick]
    # rank each ball by queue position among its bin's committed balls
    by_bin = np.lexsort((chosen_pos, chosen))
    sorted_chosen = chosen[by_bin]
    cfirst = np.ones(n, dtype=bool)
    cfirst[1:] = sorted_chosen[1:] != sorted_chosen[:-1]
    crun_start = np.flatnonzero(cfirst)
    height = np.empty(n, dtype=np.int64)
    height[by_bin] = np.arange(n, dtype=np.int64) - crun_start[np.cumsum(cfirst) - 1] + 1
    fits = height <= cap
    remaining = int(np.count_nonzero(~fits))
    loads = np.bincount(chosen[fits], minlength=n)
    if loads.max(initial=0) > cap:
        raise InvariantViolation(f"a bin exceeded cap {cap}")
    record = SimRoundRecord(
        balls_remaining=remaining,
        load_histogram=_histogram(loads, cap),
        requests_sent=total,
        responses_sent=total,
    )
    _check_conservation(loads, remaining, n)
    return SimOutcome(
        per_round=(record,),
        commits_total=n - remaining,
        messages_total=2 * total + n,
    )


def _accept_one_per_bin(
    rng: np.random.Generator,
    n: int,
    cap: int,
    loads: np.ndarray,
    ball_ids: np.ndarray,
    contact_bins: np.ndarray,
) -> tuple[np.ndarray, int]:
    """One acceptance round: each bin below cap picks one requester uniformly,
    each multiply-accepted ball keeps one acceptance uniformly.

    ``ball_ids``/``contact_bins`` are parallel flat arrays of this round's
    requests.  Returns (committed ball ids, acceptance count); mutates loads.
    """
    total = contact_bins.size
    if total == 0:
        return np.empty(0, dtype=np.int64), 0
    bin_bits = max(1, (n - 1).bit_length())
    tie_bits = 63 - bin_bits
    key = (contact_bins << tie_bits) | rng.integers(
        0, 1 << tie_bits, size=total, dtype=np.int64
    )
    order = np.argsort(key, kind="stable")
    sorted_bins = contact_bins[order]
    first = np.ones(total, dtype=bool)
    first[1:] = sorted_bins[1:] != sorted_bins[:-1]
    open_slot = loads[sorted_bins] < cap
    winners = order[first & open_slot]
    acc_ball = ball_ids[winners]
    acc_bin = contact_bins[winners]
    if acc_ball.size == 0:
        return np.empty(0, dtype=np.int64), 0
    # a ball accepted by several bins commits to one of them uniformly
    u = rng.random(acc_ball.size)
    by_ball = np.lexsort((u, acc_ball))
    b_sorted = acc_ball[by_ball]
    keep = np.ones(b_sorted.size, dtype=bool)
    keep[1:] = b_sorted[1:] != b_sorted[:-1]
    sel = by_ball[keep]
    loads += np.bincount(acc_bin[sel], minlength=n)
    if loads.max(initial=0) > cap:
        raise InvariantViolation(f"a bin exceeded cap {cap}")
    return acc_ball[sel], int(acc_ball.size)


def greedy_multiround(cfg: BaselineConfig) -> SimOutcome:
    """Non-adaptive multi-round variant: each ball fixes d bins up front and
    requests all of them every round until some bin accepts it."""
    _require(cfg, Baseline.GREEDY_MULTIROUND)
    n, d, cap = cfg.n, cfg.d, cfg.load_cap
    rng = np.random.default_rng(cfg.seed)
    home = rng.integers(0, n, size=(n, d), dtype=np.int64)
    committed = np.zeros(n, dtype=bool)
    loads = np.zeros(n, dtype=np.int64)
    records = []
    requests = responses = 0
    for _ in range(cfg.rounds):
        ball_ids = np.flatnonzero(~committed)
        flat_bins = home[ball_ids].ravel()
        flat_balls = np.repeat(ball_ids, d)
        placed, accepted = _accept_one_per_bin(
            rng, n, cap, loads, flat_balls, flat_bins
        )
        committed[placed] = True
        req = int(ball_ids.size) * d
        requests += req
        responses += accepted
        remaining = int(np.count_nonzero(~committed))
        _check_conservation(loads, remaining, n)
        records.append(
            SimRoundRecord(
                balls_remaining=remaining,
                load_histogram=_histogram(loads, cap),
                requests_sent=req,
                responses_sent=accepted,
            )
        )
    placed_total = n - records[-1].balls_remaining
    return SimOutcome(
        per_round=tuple(records),
        commits_total=placed_total,
        messages_total=requests + responses + placed_total,
    )


def h_retry(cfg: BaselineConfig) -> SimOutcome:
    """Adaptive 3-round retry: two acceptance rounds on 2 fixed bins, then the
    still-unplaced balls draw 2 extra bins and run a final round over all 4."""
    _require(cfg, Baseline.H_RETRY)
    if cfg.rounds != 3:
        raise ValidationError(
            f"the retry baseline is a fixed 3-round procedure, got rounds={cfg.rounds}"
        )
    if cfg.d != 2:
        raise ValidationError(
            f"the retry baseline contacts 2+2 bins, got d={cfg.d}"
        )
    n, cap = cfg.n, cfg.load_cap
    rng = np.random.default_rng(cfg.seed)
    home = rng.integers(0, n, size=(n, 2), dtype=np.int64)
    committed = np.zeros(n, dtype=bool)
    loads = np.zeros(n, dtype=np.int64)
    records = []
    requests = responses = 0
    for rnd in range(3):
        ball_ids = np.flatnonzero(~committed)
        if rnd < 2:
            contacts = home[ball_ids]
        else:
            extra = rng.integers(0, n, size=(ball_ids.size, 2), dtype=np.int64)
            contacts = np.concatenate([home[ball_ids], extra], axis=1)
        width = contacts.shape[1]
        placed, accepted = _accept_one_per_bin(
            rng, n, cap, loads, np.repeat(ball_ids, width), contacts.ravel()
        )
        committed[placed] = True
        req = int(ball_ids.size) * width
        requests += req
        responses += accepted
        remaining = int(np.count_nonzero(~committed))
        _check_conservation(loads, remaining, n)
        records.append(
            SimRoundRecord(
                balls_remaining=remaining,
                load_histogram=_histogram(loads, cap),
                requests_sent=req,
                responses_sent=accepted,
            )
        )
    placed_total = n - records[-1].balls_remaining
    return SimOutcome(
        per_round=tuple(records),
        commits_total=placed_total,
        messages_total=requests + responses + placed_total,
    )


def stemann(cfg: BaselineConfig) -> SimOutcome:
    """Invitation/withdrawal protocol on 2 contacts per ball.

    Each ball contacts 2 bins once.  Per round, every bin whose load plus
    still-uncommitted contacting balls fits under the cap invites all of
    them; an invited ball commits to one inviting bin (uniform when both
    invite) and sends a withdrawal notice to its other contacted bin unless
    that bin also invited this round (an inviting bin needs no notice: all
    its uncommitted contacts are certain to commit somewhere this round, so
    it zeroes its pending count by itself).  Bins never invite a ball that
    committed earlier.  Withdrawals count as requests, invitations as
    responses, plus one commit message per placed ball.
    """
    _require(cfg, Baseline.STEMANN)
    if cfg.d != 2:
        raise ValidationError(f"the collision protocol contacts 2 bins, got d={cfg.d}")
    n, cap = cfg.n, cfg.load_cap
    rng = np.random.default_rng(cfg.seed)
    c1 = rng.integers(0, n, size=n, dtype=np.int64)
    c2 = rng.integers(0, n, size=n, dtype=np.int64)
    distinct = c1 != c2
    # pending uncommitted contacts per bin (a double-contacting ball counts once)
    pending = np.bincount(c1, minlength=n) + np.bincount(c2[distinct], minlength=n)
    committed = np.zeros(n, dtype=bool)
    loads = np.zeros(n, dtype=np.int64)
    records = []
    requests = responses = 0
    for rnd in range(cfg.rounds):
        inviting = (pending > 0) & (loads + pending <= cap)
        inv1 = inviting[c1] & ~committed
        inv2 = inviting[c2] & ~committed & distinct
        invitations = int(np.count_nonzero(inv1)) + int(np.count_nonzero(inv2))
        has = inv1 | inv2
        both = inv1 & inv2
        chosen = np.where(inv1, c1, c2)
        both_ids = np.flatnonzero(both)
        flip = rng.random(both_ids.size) < 0.5
        chosen[both_ids[flip]] = c2[both_ids[flip]]
        placed_ids = np.flatnonzero(has)
        loads += np.bincount(chosen[placed_ids], minlength=n)
        if loads.max(initial=0) > cap:
            raise InvariantViolation(f"a bin exceeded cap {cap}")
        # the inviting bins resolve all their pending contacts this round
        pending[inviting] = 0
        # withdrawal notices go to the non-inviting other bin of each solo invite
        only1 = inv1 & ~inv2 & distinct
        only2 = inv2 & ~inv1
        wd_bins = np.concatenate([c2[only1], c1[only2]])
        pending -= np.bincount(wd_bins, minlength=n)
        if pending.min(initial=0) < 0:
            raise InvariantViolation("withdrawal double-counted a pending contact")
        committed |= has
        withdrawals = int(wd_bins.size)
        req = (2 * n if rnd == 0 else 0) + withdrawals
        requests += req
        responses += invitations
        remaining = int(np.count_nonzero(~committed))
        _check_conservation(loads, remaining, n)
        records.append(
            SimRoundRecord(
                balls_remaining=remaining,
                load_histogram=_histogram(loads, cap),
                requests_sent=req,
                responses_sent=invitations,
            )
        )
    placed_total = n - records[-1].balls_remaining
    return SimOutcome(
        per_round=tuple(records),
        commits_total=placed_total,
        messages_total=requests + responses + placed_total,
    )


_RUNNERS = {
    Baseline.GREEDY_ONESHOT: greedy_oneshot,
    Baseline.GREEDY_MULTIROUND: greedy_multiround,
    Baseline.H_RETRY: h_retry,
    Baseline.STEMANN: stemann,
}


def run_baseline(cfg: BaselineConfig) -> SimOutcome:
    """Dispatch a config to its algorithm's runner."""
    return _RUNNERS[cfg.algorithm](cfg)
