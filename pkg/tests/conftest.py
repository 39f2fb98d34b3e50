import pytest

from fracbubble.core import make_params

MATRIX = [(2, 0.25), (2, 0.75), (3, 0.25), (3, 0.75)]

# closed-form values from gamma-function expressions; the oracles never use them
FROZEN = {
    (2, 0.25): {"c1": 3.141592653589793, "c3": 12.566370614359172, "c_frac": 1.046049620053102,
                "d_star": 2.092099240106203, "g_green": 0.07607427986246772,
                "yamabe": 1.392642851466656},
    (2, 0.75): {"c1": 3.141592653589793, "c3": 4.1887902047863905, "c_frac": 0.7169831962291874,
                "d_star": 0.4779887974861251, "g_green": 0.33296793550170023,
                "yamabe": 1.6918871106909634},
    (3, 0.25): {"c1": 2.4674011002723395, "c3": 21.966497999609988, "c_frac": 1.4339663924583748,
                "d_star": 2.092099240106203, "g_green": 0.031746817967120484,
                "yamabe": 1.6669104350670514},
    (3, 0.75): {"c1": 2.4674011002723395, "c3": 6.022509695065098, "c_frac": 2.6151240501327546,
                "d_star": 0.4779887974861251, "g_green": 0.06349363593424097,
                "yamabe": 4.107827252061524},
}

_CRITERIA: dict = {}


@pytest.fixture(params=MATRIX, ids=lambda t: f"n{t[0]}-g{t[1]}")
def params(request):
    return make_params(*request.param)


@pytest.fixture
def record_criterion():
    """Store one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def record(number: int, passed: bool, detail: str):
        _CRITERIA[number] = (passed, detail)
        print(f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        passed, detail = _CRITERIA[k]
        terminalreporter.write_line(f"CRITERION {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
