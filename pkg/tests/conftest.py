import pathlib

import pytest

from rms import data_path
from rms import kernel as k
from rms.parser import parse, parse_configuration, parse_global, parse_process

DATA = pathlib.Path(data_path("traveller.rms")).parent

# Processes and configurations of the traveller run, written out by hand.
P_TR1 = "ckpt A { Ht?{ nAv. Al!ds, av. Al!rs. ckpt B { Al?{ nAv, av } } } }"
P_AL1 = "ckpt A { Tr?{ ds, rs. ckpt B { Tr!{ nAv, av } } } }"
HT_CK = "ckpt A { Tr!{ nAv, av } }"
TR_B = "ckpt B { Al?{ nAv, av } }"
AL_B = "ckpt B { Tr!{ nAv, av } }"

CONFIGS = {
    "P_Tr": f'< [] ; Ht!qr("in"). Al!qr("in"). {P_TR1} >',
    "P_Ht": f"< [] ; Tr?qr(x:Str). {HT_CK} >",
    "P_Al": f"< [] ; Tr?qr(x:Str). {P_AL1} >",
    "C1": f'< [] ; Al!qr("in"). {P_TR1} >',
    "C2": f"< [] ; {P_TR1} >",
    "C3": f"< [{P_TR1}] ; Al!rs. {TR_B} >",
    "C4": f"< [{P_TR1}] ; {TR_B} >",
    "C5": f"< [{P_TR1}, {TR_B}] ; end >",
    "C6": f"< [] ; {HT_CK} >",
    "C7": f"< [{HT_CK}] ; Tr!av >",
    "C8": f"< [{HT_CK}] ; end >",
    "C9": f"< [] ; {P_AL1} >",
    "C10": f"< [{P_AL1}] ; {AL_B} >",
    "C11": f"< [{P_AL1}, {AL_B}] ; Tr!av >",
    "C12": f"< [{P_AL1}, {AL_B}] ; end >",
}

# Sessions after each reduction of the traveller run, then after the two rollbacks.
RUN = [
    ("P_Tr", "P_Ht", "P_Al"),
    ("C1", "C6", "P_Al"),
    ("C2", "C6", "C9"),
    ("C2", "C7", "C9"),
    ("C3", "C8", "C9"),
    ("C4", "C8", "C10"),
    ("C4", "C8", "C11"),
    ("C5", "C8", "C12"),
]
AFTER_ROLL_B = ("C4", "C8", "C10")
AFTER_ROLL_A = ("C2", "C6", "C9")

G2 = "ckpt B Al -> Tr { nAv, av }"
G1 = f"ckpt A Ht -> Tr {{ nAv. Tr -> Al ds, av. Tr -> Al rs. {G2} }}"
G = f"Tr -> Ht qr(Str). Tr -> Al qr(Str). {G1}"

# The three projections of G, transcribed from the running example.
PROJ = {
    "Tr": "Ht!qr(Str). Al!qr(Str). ckpt A { Ht?{ nAv. Al!ds, av. Al!rs. ckpt B { Al?{ nAv, av } } } }",
    "Ht": "Tr?qr(Str). ckpt A { Tr!{ nAv, av } }",
    "Al": "Tr?qr(Str). ckpt A { Tr?{ ds, rs. ckpt B { Tr!{ nAv, av } } } }",
}

# Global pairs typing the eight sessions of the run. Entries 4 and 7 keep all
# branches of the crossed checkpoint, as the global checkpoint rule does.
PAIRS = [
    ([], G),
    ([], f"Tr -> Al qr(Str). {G1}"),
    ([], G1),
    ([G1], f"Ht -> Tr {{ nAv. Tr -> Al ds, av. Tr -> Al rs. {G2} }}"),
    ([G1], f"Tr -> Al rs. {G2}"),
    ([G1], G2),
    ([G1, G2], "Al -> Tr { nAv, av }"),
    ([G1, G2], "end"),
]


def config(name: str) -> k.Configuration:
    return parse_configuration(CONFIGS[name])


def session(names) -> k.Session:
    return k.Session.of(dict(zip(("Tr", "Ht", "Al"), (config(n) for n in names))))


def pair(history, active) -> k.GlobalPair:
    return k.GlobalPair(tuple(parse_global(g) for g in history), parse_global(active))


@pytest.fixture(scope="session")
def traveller():
    return parse((DATA / "traveller.rms").read_text())


@pytest.fixture(scope="session")
def fig3_script():
    return (DATA / "fig3.steps").read_text()


@pytest.fixture
def proc():
    return parse_process


# One summary line per acceptance criterion.

_CRITERIA: dict[str, list[bool]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        name = report.nodeid.split("::test_criterion_", 1)[1].split("[", 1)[0]
        _CRITERIA.setdefault(name, []).append(report.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda n: int(n.split("_", 1)[0])):
        number, title = name.split("_", 1)
        verdict = "PASS" if all(_CRITERIA[name]) else "FAIL"
        terminalreporter.write_line(f"criterion {number} ({title.replace('_', ' ')}): {verdict}")
