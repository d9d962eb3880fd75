"""
Tests for the command-line interface and the cross-check battery.

Run with: pytest vibroimpact/test_cli.py
"""

import io
import json
import math
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
from unittest import TestCase
from unittest.mock import patch

import pytest

from impact_resonance import presets

from . import cli
from .exceptions import ConfigError, IntegrationError, NoUniformBranch
from .model import OscillatorConfig
from .oracles import check_conservative_laws, run_oracles
from .resonance import Stability
from .serializers import parse_config
from .utils import format_value, read_csv, read_jsonl

J_CANONICAL = 2.0 * math.sqrt(3.0)


class BaseTestCase(TestCase):
    """Base test case running the CLI against configs in a scratch directory."""

    def setUp(self):
        """Create a temporary output directory."""
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.out = self.tmp / "out"

    def tearDown(self):
        self._tmp.cleanup()

    def write_config(self, data, name="config.json"):
        path = self.tmp / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    def run_cli(self, command, data, *extra):
        """Run a subcommand and return (exit code, stdout)."""
        config = self.write_config(data)
        stdout, stderr = io.StringIO(), io.StringIO()
        argv = [command, "--config", str(config), "--out", str(self.out), *extra]
        with redirect_stdout(stdout), redirect_stderr(stderr):
            code = cli.main(argv)
        self.stderr = stderr.getvalue()
        return code, stdout.getvalue()

    def read_output(self, name):
        return read_csv(self.out / name)


class ResonancesCommandTests(BaseTestCase):
    """Test the resonances table."""

    def test_canonical_table(self):
        """Test n = 1 resonates at 2√3 and higher orders fall outside the band."""
        code, _ = self.run_cli("resonances", {"resonance": {"n_max": 3}})
        self.assertEqual(code, cli.EXIT_OK)
        header = (self.out / "resonances.csv").read_text().splitlines()[0]
        self.assertEqual(header, "n,j_pq,omega0,omega0_prime,a_n_max,exists")
        rows = self.read_output("resonances.csv")
        self.assertEqual([row["n"] for row in rows], ["1", "2", "3"])
        self.assertEqual(rows[0]["j_pq"], "3.46410162")
        self.assertEqual(rows[0]["omega0"], "1.5")
        self.assertEqual(rows[0]["exists"], "true")
        self.assertEqual([row["exists"] for row in rows[1:]], ["false", "false"])

    def test_damping_average_is_reported(self):
        """Test the output names the damping average behind the numbers."""
        _, stdout = self.run_cli("resonances", {"resonance": {"n_max": 1}})
        self.assertIn("damping average: exact", stdout)
        exact = float(self.read_output("resonances.csv")[0]["a_n_max"])
        data = {"resonance": {"n_max": 1, "damping_average": "leading"}}
        _, stdout = self.run_cli("resonances", data)
        self.assertIn("damping average: leading", stdout)
        leading = float(self.read_output("resonances.csv")[0]["a_n_max"])
        # |A₁| peaks at the beat minimum E = 0.5, three times its τ = 0 value
        self.assertAlmostEqual(leading, 3 * 0.134353, delta=1e-3)
        self.assertAlmostEqual(exact, 3 * 0.16213, delta=1e-3)

    def test_strong_damping_has_no_resonance(self):
        """Test γ = 1 pushes max|A₁| above one."""
        data = {"oscillator": {"gamma": 1.0}, "resonance": {"n_max": 1}}
        self.run_cli("resonances", data)
        row = self.read_output("resonances.csv")[0]
        self.assertEqual(row["exists"], "false")
        self.assertGreater(float(row["a_n_max"]), 1.0)

    def test_zero_delta_is_degenerate(self):
        """Test Δ = 0 flags every row degenerate."""
        data = {"oscillator": {"delta": 0.0}, "resonance": {"n_max": 3}}
        code, _ = self.run_cli("resonances", data)
        self.assertEqual(code, cli.EXIT_OK)
        rows = self.read_output("resonances.csv")
        self.assertEqual({row["exists"] for row in rows}, {"degenerate"})
        self.assertEqual(rows[0]["omega0"], "2")


class EquilibriaCommandTests(BaseTestCase):
    """Test the branch table."""

    def test_canonical_branches(self):
        """Test two branches, one per stability label, sampled on 256 points."""
        code, stdout = self.run_cli("equilibria", {})
        self.assertEqual(code, cli.EXIT_OK)
        rows = self.read_output("equilibria.csv")
        self.assertEqual(len(rows), 512)
        self.assertEqual(list(rows[0]), cli.EQUILIBRIA_COLUMNS)
        labels = {row["branch_id"]: row["stability"] for row in rows}
        self.assertEqual(labels, {"0": "UnstableThm1", "1": "StableThm2"})
        self.assertIn("branch 1", stdout)

    def test_second_harmonic_has_four(self):
        """Test the ν = 3, n = 2 resonance yields two stable and two unstable."""
        self.run_cli("equilibria", presets.get_preset("second_harmonic"))
        labels = {}
        for row in self.read_output("equilibria.csv"):
            labels[row["branch_id"]] = row["stability"]
        self.assertEqual(len(labels), 4)
        self.assertEqual(list(labels.values()).count("StableThm2"), 2)

    def test_distinct_phases_constant(self):
        """Test distinct frequencies give an eta0 column constant per branch."""
        self.run_cli("equilibria", presets.get_preset("distinct"))
        by_branch = {}
        for row in self.read_output("equilibria.csv"):
            by_branch.setdefault(row["branch_id"], set()).add(row["eta0"])
        self.assertTrue(all(len(values) == 1 for values in by_branch.values()))

    def test_no_branch_exit_code(self):
        """Test γ = 1 exits with the no-branch code."""
        code, _ = self.run_cli("equilibria", {"oscillator": {"gamma": 1.0}})
        self.assertEqual(code, cli.EXIT_NO_BRANCH)
        self.assertIn("no branch", self.stderr)


class VerifyCommandTests(BaseTestCase):
    """Test the cross-check battery."""

    def test_empty_config_passes(self):
        """Test every check passes for the built-in parameters."""
        code, stdout = self.run_cli("verify", {})
        self.assertEqual(code, cli.EXIT_OK, stdout)
        lines = stdout.strip().splitlines()
        self.assertTrue(all(line.startswith("PASS") for line in lines[:-1]))
        self.assertTrue(lines[-1].endswith("checks passed"))

    def test_injected_fault_fails(self):
        """Test tightening every tolerance 1e3× reports failures."""
        code, stdout = self.run_cli("verify", {}, "--inject-fault")
        self.assertEqual(code, cli.EXIT_VERIFY_FAILED)
        self.assertIn("FAIL", stdout)

    def test_negative_limiter_passes(self):
        """Test the checks also hold with the limiter at Δ = -1."""
        code, stdout = self.run_cli("verify", presets.get_preset("negative_limiter"))
        self.assertEqual(code, cli.EXIT_OK, stdout)

    def test_checks_without_field(self):
        """Test the battery runs the kernel and conservative checks alone."""
        config = OscillatorConfig(big_omega=1.0, delta=1.0, gamma=0.1, epsilon=0.005)
        checks = run_oracles(config)
        names = [check.name for check in checks]
        self.assertNotIn("f0_closed_form_quad", names)
        self.assertIn("conservative_period_law", names)
        self.assertTrue(all(check.passed for check in checks))


class ConfigErrorTests(BaseTestCase):
    """Test configuration failures map to exit code 2."""

    def test_unknown_key(self):
        """Test an unknown key exits 2 with the offending path."""
        code, _ = self.run_cli("resonances", {"oscillator": {"omega": 1.0}})
        self.assertEqual(code, cli.EXIT_CONFIG)
        self.assertIn("oscillator", self.stderr)

    def test_missing_file(self):
        """Test a missing config file exits 2."""
        with redirect_stderr(io.StringIO()):
            code = cli.main(["verify", "--config", str(self.tmp / "none.json")])
        self.assertEqual(code, cli.EXIT_CONFIG)

    def test_negative_stride(self):
        """Test a negative samples stride is rejected."""
        code, _ = self.run_cli(
            "simulate",
            presets.get_preset("conservative_positive"),
            "--samples-stride",
            "-1",
        )
        self.assertEqual(code, cli.EXIT_CONFIG)

    def test_scan_without_block(self):
        """Test scan needs a scan block."""
        code, _ = self.run_cli("scan", {})
        self.assertEqual(code, cli.EXIT_CONFIG)


class SimulateCommandTests(BaseTestCase):
    """Test the simulate command."""

    def test_conservative_run(self):
        """Test an ε = 0 run writes events and a zero-spread lock report."""
        code, stdout = self.run_cli(
            "simulate",
            presets.get_preset("conservative_positive"),
            "--samples-stride",
            "5",
        )
        self.assertEqual(code, cli.EXIT_OK)
        events = self.read_output("events.csv")
        self.assertEqual(len(events), 20)
        self.assertEqual(list(events[0]), cli.EVENT_COLUMNS)
        self.assertAlmostEqual(float(events[0]["j_alpha"]), 2 * math.sqrt(3), places=7)
        self.assertTrue(self.read_output("samples.csv"))
        record = read_jsonl(self.out / "lock_report.jsonl")[0]
        self.assertLess(record["circ_std"], 1e-6)
        self.assertEqual(record["stop_reason"], "max_impacts")
        self.assertIn("20 impacts", stdout)

    def test_reports_append(self):
        """Test repeated runs append to the lock report."""
        data = presets.get_preset("conservative_zero")
        self.run_cli("simulate", data)
        self.run_cli("simulate", data)
        self.assertEqual(len(read_jsonl(self.out / "lock_report.jsonl")), 2)
        self.assertFalse((self.out / "samples.csv").exists())
        # Δ = 0 has no resonance frame, so no event phase is written
        phases = {row["eta_hat"] for row in self.read_output("events.csv")}
        self.assertEqual(phases, {""})

    @patch("vibroimpact.cli.simulate", side_effect=IntegrationError("step failed"))
    def test_integration_error_exit_code(self, _):
        """Test an integrator failure exits 4."""
        code, _ = self.run_cli("simulate", presets.get_preset("conservative_positive"))
        self.assertEqual(code, cli.EXIT_INTEGRATION)

    def test_branch_start_without_branch(self):
        """Test a branch start with no locked phase exits 3."""
        data = {"oscillator": {"gamma": 1.0}, "simulation": {"max_impacts": 10}}
        code, _ = self.run_cli("simulate", data)
        self.assertEqual(code, cli.EXIT_NO_BRANCH)

    @pytest.mark.slow
    @pytest.mark.acceptance
    def test_unstable_start_relocks(self):
        """Test a distinct-frequency run from the unstable branch relocks."""
        data = presets.get_preset("distinct")
        data["simulation"]["max_impacts"] = 6000
        data["simulation"]["warmup"] = 0.7
        stable = None
        for offset in (0.1, -0.1):
            data["simulation"]["initial"] = {
                "mode": "branch",
                "branch": "unstable",
                "phase_offset": offset,
            }
            code, _ = self.run_cli("simulate", data)
            self.assertEqual(code, cli.EXIT_OK)
            if stable is None:
                analysis = cli.analyze(parse_config(data))
                stable = [branch.stability for branch in analysis.branches].index(
                    Stability.STABLE_THM2
                )
        records = read_jsonl(self.out / "lock_report.jsonl")
        self.assertEqual(len(records), 2)
        self.assertIn(stable, [record["matched_branch"] for record in records])
        self.assertTrue(any(record["locked"] for record in records))


class BranchSelectionTests(TestCase):
    """Test choosing the starting branch."""

    def setUp(self):
        """Classify the canonical branches."""
        self.analysis = cli.analyze(parse_config({}))

    def test_selectors(self):
        """Test stable, unstable and index selectors."""
        branches = self.analysis.branches
        stable = cli.select_branch(branches, "stable")
        self.assertEqual(stable.stability, Stability.STABLE_THM2)
        unstable = cli.select_branch(branches, "unstable")
        self.assertEqual(unstable.stability, Stability.UNSTABLE_THM1)
        self.assertIs(cli.select_branch(branches, 0), branches[0])

    def test_bad_selectors(self):
        """Test an out-of-range index and a missing label."""
        with self.assertRaises(ConfigError):
            cli.select_branch(self.analysis.branches, 5)
        with self.assertRaises(NoUniformBranch):
            cli.select_branch(self.analysis.branches[:1], "stable")

    def test_analysis_counts(self):
        """Test stable and unstable counts of the canonical analysis."""
        self.assertIsNone(self.analysis.failure)
        self.assertEqual(self.analysis.count(Stability.STABLE_THM2), 1)
        self.assertEqual(self.analysis.count(*cli.UNSTABLE_LABELS), 1)


class ScanCommandTests(BaseTestCase):
    """Test the parameter scan."""

    def scan_config(self, **scan):
        data = {"simulation": {"max_impacts": 40}}
        data["scan"] = scan
        return data

    def test_gamma_scan_existence(self):
        """Test existence flips off past the damping threshold, in grid order."""
        data = self.scan_config(axis="gamma", start=0.1, stop=1.0, count=3)
        code, stdout = self.run_cli("scan", data)
        self.assertEqual(code, cli.EXIT_OK)
        rows = self.read_output("scan.csv")
        self.assertEqual(list(rows[0]), cli.SCAN_COLUMNS)
        self.assertEqual([row["index"] for row in rows], ["0", "1", "2"])
        self.assertEqual([row["exists"] for row in rows], ["true", "false", "false"])
        self.assertEqual(rows[0]["stable_branches"], "1")
        self.assertEqual(rows[2]["stable_branches"], "0")
        self.assertTrue(all(row["error"] == "" for row in rows))
        self.assertIn("0 failed", stdout)

    @pytest.mark.integration
    def test_parallel_matches_serial(self):
        """Test two workers give the same table as one."""
        data = self.scan_config(axis="nu", start=1.45, stop=1.55, count=3)
        self.run_cli("scan", data, "--jobs", "1")
        serial = self.read_output("scan.csv")
        self.run_cli("scan", data, "--jobs", "2")
        self.assertEqual(self.read_output("scan.csv"), serial)

    def test_failing_point_recorded(self):
        """Test an invalid grid point fills the error column and the rest run."""
        data = self.scan_config(axis="gamma", start=-0.1, stop=0.1, count=2)
        code, stdout = self.run_cli("scan", data)
        self.assertEqual(code, cli.EXIT_OK)
        rows = self.read_output("scan.csv")
        self.assertTrue(rows[0]["error"].startswith("ConfigError"))
        self.assertEqual(rows[0]["exists"], "")
        self.assertEqual(rows[1]["exists"], "true")
        self.assertIn("1 failed", stdout)

    def test_out_of_band_point_still_simulates(self):
        """Test a state start is simulated where the resonance does not exist."""
        data = self.scan_config(axis="nu", start=1.5, stop=0.5, count=2)
        data["simulation"]["initial"] = {"mode": "state", "x": 1.0, "v": -1.0}
        self.run_cli("scan", data)
        row = self.read_output("scan.csv")[1]
        self.assertEqual(row["exists"], "false")
        self.assertEqual(row["error"], "")
        self.assertEqual(row["locked"], "false")
        self.assertAlmostEqual(float(row["mean_impulse"]), 2.0, delta=0.5)

    def test_single_point_matches_simulate(self):
        """Test a one-point scan reports what simulate reports for the same run."""
        data = self.scan_config(axis="epsilon", start=0.005, stop=0.005, count=1)
        self.run_cli("scan", data)
        row = self.read_output("scan.csv")[0]
        self.run_cli("simulate", data)
        record = read_jsonl(self.out / "lock_report.jsonl")[0]
        for key in ("locked", "mean_impulse", "circ_std", "matched_branch"):
            with self.subTest(column=key):
                self.assertEqual(row[key], format_value(record[key]))

    @pytest.mark.slow
    @pytest.mark.acceptance
    def test_epsilon_scan_impulse_converges(self):
        """Test the mean impulse approaches 2√3 as ε falls from 0.02 to 0.005."""
        data = self.scan_config(axis="epsilon", start=0.02, stop=0.005, count=4)
        data["simulation"]["max_impacts"] = 2000
        code, _ = self.run_cli("scan", data)
        self.assertEqual(code, cli.EXIT_OK)
        rows = self.read_output("scan.csv")
        values = [float(row["value"]) for row in rows]
        self.assertEqual(values[0], 0.02)
        self.assertAlmostEqual(values[2], 0.01)
        self.assertEqual(values[3], 0.005)
        errors = [abs(float(row["mean_impulse"]) - J_CANONICAL) for row in rows]
        for epsilon, error in zip(values, errors):
            self.assertLess(error, 5.0 * math.sqrt(epsilon))
        self.assertLess(errors[-1], errors[0])

    def test_payloads_set_axis(self):
        """Test each payload overrides exactly the scanned parameter."""
        data = self.scan_config(axis="epsilon", start=0.02, stop=0.01, count=2)
        run = parse_config(data)
        payloads = cli.scan_payloads(run)
        self.assertEqual(payloads[1]["config"]["oscillator"]["epsilon"], 0.01)
        self.assertNotIn("scan", payloads[0]["config"])
        self.assertEqual(parse_config(payloads[0]["config"]).oscillator.epsilon, 0.02)


class ConservativeLawTests(TestCase):
    """Test the ε = 0 laws used by the battery."""

    def test_short_runs(self):
        """Test period law and impulse conservation over 20 impacts."""
        period_error, impulse_error = check_conservative_laws(20)
        self.assertLessEqual(period_error, 1e-8)
        self.assertLessEqual(impulse_error, 1e-9)
