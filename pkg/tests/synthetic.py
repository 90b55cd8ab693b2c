"""Seeded multi-sense lines over the minimal KB."""
import random

DETS = ("a", "the")
NOUNS = ("person", "river", "bank", "light", "fire", "routine", "redness", "people")
PREPS = ("of", "along", "to", "from", "near")
VERBS = ("walks", "runs", "fired", "halted", "run", "walked")
AUX = ("is", "was", "has")
AMBIGUOUS = ("bank", "light", "fire", "runs", "run", "fired")
ALL = DETS + NOUNS + PREPS + VERBS + AUX
FITTING_SUBJECTS = {"walks": ("person", "people", "light"), "walked": ("person", "fire"),
                    "runs": ("person", "river"), "run": ("people", "river"),
                    "fired": ("bank",), "halted": ("routine",)}


def _np(rng, nouns=NOUNS):
    words = [rng.choice(DETS)] if rng.random() < 0.8 else []
    if rng.random() < 0.3:
        words.append("light")
    words.append(rng.choice(nouns))
    return words


def synthetic_line(rng: random.Random, max_tokens: int = 12) -> str:
    verb = rng.choice(VERBS)
    fitting = rng.random() < 0.7
    words = _np(rng, FITTING_SUBJECTS[verb] if fitting else NOUNS)
    if rng.random() < 0.3:
        words += [rng.choice(PREPS)] + _np(rng)
    if rng.random() < 0.85:
        if rng.random() < 0.3:
            words.append(rng.choice(AUX))
        words.append(verb)
        if rng.random() < 0.5:
            words += _np(rng)
        if rng.random() < 0.5:
            words += [rng.choice(PREPS)] + _np(rng)
    if rng.random() < 0.2:  # noise keeps some lines outside the grammar
        words[rng.randrange(len(words))] = rng.choice(ALL)
    if not any(w in AMBIGUOUS for w in words):
        words[rng.randrange(len(words))] = rng.choice(AMBIGUOUS)
    return " ".join(words[:max_tokens])


def synthetic_lines(seed: int = 7, n: int = 50):
    rng = random.Random(seed)
    return [synthetic_line(rng) for _ in range(n)]
