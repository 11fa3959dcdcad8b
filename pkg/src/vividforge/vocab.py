"""Label vocabulary filters for entity selection and background positioning.

Foreground mode removes tagger labels that are adjectives, verbs, colors, or
repeated character descriptions; background mode keeps only known scenery
labels. Matching is exact-string on lowercased labels, never substring, since
multi-word labels like "person man" are exact label forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal

FilterMode = Literal["foreground", "background"]

ADJECTIVES = (
    "ancient", "athletic", "beautiful", "classic", "clean", "clear", "close-up",
    "crowded", "decorative", "dark", "empty", "fresh", "healthy", "high", "indoor",
    "light", "long", "modern", "narrow", "new", "old", "outdoor", "peaceful",
    "quiet", "rainy", "remote", "romantic", "sharp", "shiny", "short", "silent",
    "single", "small", "smooth", "soft", "spicy", "square", "strong", "stunning",
    "sweet", "tall", "tiny", "traditional", "warm", "wet", "wide", "wooden",
)

VERBS = (
    "act", "add", "adjust", "aid", "appear", "applause", "approach", "archery",
    "arrest", "assemble", "attach", "attend", "auction", "back", "baking",
    "balance", "bend", "blow", "boil", "bounce", "build", "burn", "buy", "call",
    "carry", "carve", "catch", "celebrate", "cheer", "climb", "close", "cook",
    "cool", "cover", "create", "crochet", "crush", "cry", "cut", "dance", "decorate",
    "deliver", "dive", "dribble", "drift", "drink", "drive", "drop", "eat",
    "exercise", "feed", "fight", "fill", "find", "fit", "float", "fly", "fold",
    "freeze", "fry", "gather", "give", "glow", "glue", "go", "graze", "greet",
    "grow", "guard", "guide", "hang", "harvest", "hide", "hike", "hit", "hold",
    "hug", "hunt", "illuminate", "install", "jog", "jump", "kick", "knit",
    "laugh", "launch", "lay", "lead", "lean", "learn", "leave", "lie", "lift",
    "load", "locate", "lock", "look", "lose", "make", "measure", "milk", "mix",
    "move", "open", "pack", "paint", "peel", "perform", "pick", "plant", "play",
    "plow", "pour", "practice", "prepare", "press", "print", "pull", "punch",
    "push", "put", "read", "receive", "reflect", "relax", "release", "remove",
    "repair", "rescue", "reveal", "ride", "rise", "roll", "rub", "run", "sail",
    "scatter", "see", "sell", "send", "serve", "sew", "shake", "shape", "shear",
    "shine", "shoot", "shout", "show", "shovel", "sing", "sip", "sit", "skate",
    "ski", "sleep", "slice", "slide", "smell", "smile", "smoke", "snap",
    "snow", "soak", "sort", "sow", "speak", "spill", "spin", "splash", "split",
    "spread", "spring", "sprinkle", "squeeze", "stab", "stand", "start",
    "stare", "steam", "stir", "stitch", "stop", "store", "stretch", "strike",
    "stroll", "study", "stuff", "swirl", "swing", "take", "talk", "teach",
    "tear", "tell", "think", "throw", "tick", "tie", "toast", "touch", "tour",
    "tow", "train", "trim", "trip", "type", "unlock", "use", "vacuum", "walk",
    "wash", "watch", "wave", "wear", "weave", "weld", "widen", "wipe", "write",
    "zip", "kiss",
)

COLORS = (
    "aqua", "amber", "beige", "black", "blue", "bronze", "brown", "gold",
    "gray", "green", "lilac", "orange", "pink", "purple", "red", "silver",
    "teal", "violet", "white", "yellow",
)

REPEATED_CHARACTER_DESCRIPTIONS = (
    "person man", "person woman", "person girl", "person boy",
    "man person", "woman person", "girl person", "boy person",
    "girl woman", "boy man", "woman girl",
)

BACKGROUND_LABELS = (
    "sky", "water", "ocean", "sea", "river", "lake", "forest", "mountain",
    "desert", "field", "city", "cityscape", "city skyline", "night sky",
    "evening sky", "snow", "snowfield", "iceberg", "beach", "sand",
    "grassland", "grassy", "meadow", "garden", "park", "jungle",
    "island", "cave", "mountain range", "valley", "dune", "hill",
    "hillside", "horizon", "skyline", "background", "scenery",
    "landscape", "countryside", "farmland", "village", "road",
    "road trip", "street", "street corner", "street scene", "path",
    "trail", "outdoor", "outcrop", "rocky", "coast", "coastline",
    "shore", "shoreline", "riverbank", "river valley", "mountain lake",
    "riverbed", "mountain stream", "mountain pass", "mountain village",
    "mountaineer", "mountain view", "mountain snowy", "waterfall", "cascade",
)


def _normalize(words: Iterable[str]) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for word in words:
        seen.setdefault(word.strip().lower(), None)
    return tuple(seen)


@dataclass(frozen=True)
class VocabularyConfig:
    """Stoplists for foreground filtering plus the background allowlist."""

    adjectives: tuple[str, ...] = field(default_factory=lambda: _normalize(ADJECTIVES))
    verbs: tuple[str, ...] = field(default_factory=lambda: _normalize(VERBS))
    colors: tuple[str, ...] = field(default_factory=lambda: _normalize(COLORS))
    repeated_character_descriptions: tuple[str, ...] = field(
        default_factory=lambda: _normalize(REPEATED_CHARACTER_DESCRIPTIONS)
    )
    background_allowlist: tuple[str, ...] = field(
        default_factory=lambda: _normalize(BACKGROUND_LABELS)
    )

    def __post_init__(self):
        for name in (
            "adjectives",
            "verbs",
            "colors",
            "repeated_character_descriptions",
            "background_allowlist",
        ):
            object.__setattr__(self, name, _normalize(getattr(self, name)))

    @property
    def foreground_stoplist(self) -> frozenset[str]:
        return frozenset(
            self.adjectives
            + self.verbs
            + self.colors
            + self.repeated_character_descriptions
        )


def filter_labels(
    labels: Iterable[str], mode: FilterMode, vocab: VocabularyConfig
) -> list[str]:
    """Filter labels by mode, preserving order and dropping duplicates.

    foreground: drop any label whose lowercase form is in a stoplist.
    background: keep only labels in the allowlist.
    """
    if mode == "foreground":
        stop = vocab.foreground_stoplist
        keep = lambda w: w not in stop
    elif mode == "background":
        allow = frozenset(vocab.background_allowlist)
        keep = lambda w: w in allow
    else:
        raise ValueError(f"unknown filter mode {mode!r}")
    out: list[str] = []
    seen: set[str] = set()
    for label in labels:
        word = label.strip().lower()
        if word and word not in seen and keep(word):
            seen.add(word)
            out.append(word)
    return out
