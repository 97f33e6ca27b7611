"""Declarative unit datasheets: parsing, validation, and the builtin roster.

The stats file format is line oriented and hand-editable::

    # comment
    unit "Strike Squad" faction AST
      models 5
      profile M 6 T 4 Sv 3 W 2 Ld 7 OC 2          # optionally: Inv <n> after Sv
      weapon "Bolt Rifle" ranged range 24 A 2 BS 3 S 4 AP 1 D 1
      weapon "Combat Blade" melee A 3 WS 3 S 4 AP 0 D 1
    end

Armor penetration is stored as a non-negative penalty magnitude; ``AP -1``
and ``AP 1`` both parse to penalty 1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

RANGED = "ranged"
MELEE = "melee"

# field name -> (min, max) enforced at parse time
_FIELD_RANGES = {
    "models": (1, 10),
    "M": (1, 24),
    "T": (1, 14),
    "Sv": (2, 6),
    "Inv": (2, 6),
    "W": (1, 30),
    "Ld": (2, 12),
    "OC": (0, 10),
    "range": (1, 48),
    "A": (1, 12),
    "BS": (2, 6),
    "WS": (2, 6),
    "S": (1, 20),
    "AP": (0, 6),
    "D": (1, 12),
}


class StatsError(ValueError):
    """Raised on any syntax or range problem in a stats file."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        prefix = f"line {line}: " if line else ""
        super().__init__(prefix + message)


@dataclass(frozen=True, slots=True)
class WeaponProfile:
    name: str
    kind: str  # RANGED or MELEE
    range_squares: int  # melee is always 1
    attacks: int
    skill: int  # hit on d6 >= skill
    strength: int
    armor_penetration: int  # save penalty magnitude, >= 0
    damage: int


@dataclass(frozen=True, slots=True)
class Datasheet:
    name: str
    faction: str
    models: int
    move: int
    toughness: int
    save: int
    invulnerable_save: int | None
    wounds_per_model: int
    leadership: int  # pass battle-shock on 2d6 >= leadership
    objective_control: int
    weapons: tuple[WeaponProfile, ...]

    def ranged_weapons(self) -> list[WeaponProfile]:
        return [w for w in self.weapons if w.kind == RANGED]

    def melee_weapons(self) -> list[WeaponProfile]:
        return [w for w in self.weapons if w.kind == MELEE]

    @property
    def total_wounds(self) -> int:
        return self.models * self.wounds_per_model


@dataclass(frozen=True)
class Registry:
    """Immutable name-keyed datasheet collection."""

    datasheets: dict[str, Datasheet] = field(default_factory=dict)
    factions: frozenset[str] = frozenset()

    def __getitem__(self, name: str) -> Datasheet:
        return self.datasheets[name]

    def __eq__(self, other) -> bool:
        return isinstance(other, Registry) and self.datasheets == other.datasheets

    def by_faction(self, faction: str) -> list[Datasheet]:
        return [d for d in self.datasheets.values() if d.faction == faction]


def _check_range(key: str, value: int, line: int) -> int:
    lo, hi = _FIELD_RANGES[key]
    if not lo <= value <= hi:
        raise StatsError(f"value out of range: {key} must be {lo}..{hi}", line)
    return value


_QUOTED = re.compile(r'^"([^"]*)"')


def _tokenize(body: str, line: int) -> list[str]:
    """Split a line into tokens; quoted strings become single tokens."""
    tokens = []
    rest = body.strip()
    while rest:
        m = _QUOTED.match(rest)
        if m:
            tokens.append('"' + m.group(1) + '"')
            rest = rest[m.end():].strip()
        elif rest.startswith('"'):
            raise StatsError("unterminated quoted string", line)
        else:
            head, _, rest = rest.partition(" ")
            tokens.append(head)
            rest = rest.strip()
    return tokens


class _TokenCursor:
    def __init__(self, tokens: list[str], line: int):
        self.tokens = tokens
        self.pos = 0
        self.line = line

    def take(self) -> str:
        if self.pos >= len(self.tokens):
            raise StatsError("unexpected end of line", self.line)
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, keyword: str) -> None:
        tok = self.take()
        if tok != keyword:
            raise StatsError(f"expected '{keyword}', got '{tok}'", self.line)

    def take_int(self, key: str) -> int:
        tok = self.take()
        try:
            value = int(tok)
        except ValueError:
            raise StatsError(f"expected integer for {key}, got '{tok}'", self.line) from None
        if key == "AP":
            value = abs(value)  # normalize the physical game's "AP -1" convention
        return _check_range(key, value, self.line)

    def take_name(self) -> str:
        tok = self.take()
        if not (tok.startswith('"') and tok.endswith('"') and len(tok) >= 2):
            raise StatsError(f"expected quoted name, got '{tok}'", self.line)
        return tok[1:-1]

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def done(self) -> None:
        if self.pos != len(self.tokens):
            raise StatsError(f"trailing tokens: '{' '.join(self.tokens[self.pos:])}'", self.line)


def parse_datasheet_file(text: str) -> Registry:
    """Parse a stats file into a Registry; raises StatsError on any defect."""
    sheets: dict[str, Datasheet] = {}
    current: dict | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        cur = _TokenCursor(_tokenize(body, lineno), lineno)
        keyword = cur.take()

        if keyword == "unit":
            if current is not None:
                raise StatsError("'unit' inside unit block (missing 'end'?)", lineno)
            name = cur.take_name()
            cur.expect("faction")
            faction = cur.take()
            cur.done()
            if name in sheets:
                raise StatsError(f"duplicate unit name: {name}", lineno)
            current = {"name": name, "faction": faction, "weapons": [], "line": lineno}
        elif current is None:
            raise StatsError(f"unknown keyword outside unit block: '{keyword}'", lineno)
        elif keyword == "models":
            current["models"] = cur.take_int("models")
            cur.done()
        elif keyword == "profile":
            cur.expect("M")
            current["move"] = cur.take_int("M")
            cur.expect("T")
            current["toughness"] = cur.take_int("T")
            cur.expect("Sv")
            current["save"] = cur.take_int("Sv")
            if cur.peek() == "Inv":
                cur.take()
                current["invulnerable_save"] = cur.take_int("Inv")
            else:
                current["invulnerable_save"] = None
            cur.expect("W")
            current["wounds_per_model"] = cur.take_int("W")
            cur.expect("Ld")
            current["leadership"] = cur.take_int("Ld")
            cur.expect("OC")
            current["objective_control"] = cur.take_int("OC")
            cur.done()
        elif keyword == "weapon":
            wname = cur.take_name()
            kind = cur.take()
            if kind == RANGED:
                cur.expect("range")
                rng = cur.take_int("range")
                cur.expect("A")
                attacks = cur.take_int("A")
                cur.expect("BS")
                skill = cur.take_int("BS")
            elif kind == MELEE:
                rng = 1
                cur.expect("A")
                attacks = cur.take_int("A")
                cur.expect("WS")
                skill = cur.take_int("WS")
            else:
                raise StatsError(f"weapon kind must be 'ranged' or 'melee', got '{kind}'", lineno)
            cur.expect("S")
            strength = cur.take_int("S")
            cur.expect("AP")
            ap = cur.take_int("AP")
            cur.expect("D")
            damage = cur.take_int("D")
            cur.done()
            current["weapons"].append(
                WeaponProfile(wname, kind, rng, attacks, skill, strength, ap, damage)
            )
        elif keyword == "end":
            cur.done()
            for req in ("models", "move"):
                if req not in current:
                    raise StatsError(
                        f"unit '{current['name']}' missing "
                        + ("'models'" if req == "models" else "'profile'"),
                        lineno,
                    )
            sheets[current["name"]] = Datasheet(
                name=current["name"],
                faction=current["faction"],
                models=current["models"],
                move=current["move"],
                toughness=current["toughness"],
                save=current["save"],
                invulnerable_save=current["invulnerable_save"],
                wounds_per_model=current["wounds_per_model"],
                leadership=current["leadership"],
                objective_control=current["objective_control"],
                weapons=tuple(current["weapons"]),
            )
            current = None
        else:
            raise StatsError(f"unknown keyword: '{keyword}'", lineno)

    if current is not None:
        raise StatsError(f"unit '{current['name']}' not closed with 'end'", current["line"])
    return Registry(datasheets=sheets, factions=frozenset(d.faction for d in sheets.values()))


def render_registry(r: Registry) -> str:
    """Render a Registry back to the stats file format (parse fixpoint)."""
    out = []
    for d in sorted(r.datasheets.values(), key=lambda d: d.name):
        out.append(f'unit "{d.name}" faction {d.faction}')
        out.append(f"  models {d.models}")
        inv = f" Inv {d.invulnerable_save}" if d.invulnerable_save is not None else ""
        out.append(
            f"  profile M {d.move} T {d.toughness} Sv {d.save}{inv}"
            f" W {d.wounds_per_model} Ld {d.leadership} OC {d.objective_control}"
        )
        for w in d.weapons:
            if w.kind == RANGED:
                mid = f"ranged range {w.range_squares} A {w.attacks} BS {w.skill}"
            else:
                mid = f"melee A {w.attacks} WS {w.skill}"
            out.append(
                f'  weapon "{w.name}" {mid} S {w.strength} AP {w.armor_penetration} D {w.damage}'
            )
        out.append("end")
    return "\n".join(out) + "\n"


def validate_registry(r: Registry) -> list[str]:
    """Structural checks beyond per-field ranges; violations are data, not errors."""
    violations = []
    for d in r.datasheets.values():
        if not d.melee_weapons():
            violations.append(f"{d.name}: no melee weapon (engaged units must be able to fight)")
        if not d.weapons:
            violations.append(f"{d.name}: no weapons")
        for key, value in (
            ("models", d.models),
            ("M", d.move),
            ("T", d.toughness),
            ("Sv", d.save),
            ("W", d.wounds_per_model),
            ("Ld", d.leadership),
            ("OC", d.objective_control),
        ):
            lo, hi = _FIELD_RANGES[key]
            if not lo <= value <= hi:
                violations.append(f"{d.name}: {key} must be {lo}..{hi}")
        if d.invulnerable_save is not None and not 2 <= d.invulnerable_save <= 6:
            violations.append(f"{d.name}: Inv must be 2..6")
    return violations


def default_roster_text() -> str:
    """The fixture roster shipped with the package (src/fourhammer/data/roster.stats)."""
    return resources.files("fourhammer.data").joinpath("roster.stats").read_text()


def load_registry(path: str | None = None) -> Registry:
    """Load a registry from ``path``, or the shipped fixture roster when None."""
    if path is None:
        text = default_roster_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_datasheet_file(text)


FIXTURE_FACTIONS = ("AST", "HIV")


def builtin_roster(faction: str, registry: Registry | None = None) -> list[Datasheet]:
    """The four shipped datasheets of one fixture faction, in file order."""
    if faction not in FIXTURE_FACTIONS:
        raise KeyError(f"unknown faction: {faction} (expected one of {FIXTURE_FACTIONS})")
    reg = registry if registry is not None else load_registry()
    return reg.by_faction(faction)
