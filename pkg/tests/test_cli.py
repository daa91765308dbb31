import contextlib
import io
import json
import os
import shutil
import tempfile
import unittest

from context import mudsim
from mudsim.cli import build_parser, load_config, main

SMALL = ["--users", "2", "--gain", "4", "--info-bits", "8", "--iters", "2", "--frames", "1",
         "--pmax", "8", "--pmin", "2"]


class CliTest(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def path(self, name):
        return os.path.join(self.tmp, name)

    def read_lines(self, name):
        with open(self.path(name)) as fp:
            return fp.read().splitlines()

    def test_run_writes_csv(self):
        self.assertEqual(main(["run"] + SMALL + ["--out", self.path("r.csv")]), 0)
        lines = self.read_lines("r.csv")
        self.assertEqual(lines[0], "detector,K,L,ebn0_db,iteration,frames,bits,bit_errors,ber,avg_node_expansions")
        self.assertEqual(len(lines), 3)

    def test_run_writes_json(self):
        argv = ["run"] + SMALL + ["--detector", "pic", "--format", "json", "--out", self.path("r.json")]
        self.assertEqual(main(argv), 0)
        report = mudsim.load_report(self.path("r.json"))
        self.assertEqual((report.detector, report.users), ("pic", 2))

    def test_stdout_when_no_output(self):
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            self.assertEqual(main(["run"] + SMALL), 0)
        self.assertTrue(out.getvalue().startswith("detector,K,L"))

    def test_flags_override_config_file(self):
        with open(self.path("c.json"), "w") as fp:
            json.dump({"users": 3, "gain": 4, "seed": 9, "detector": "lmmse"}, fp)
        args = build_parser().parse_args(["run", "--config", self.path("c.json"), "--users", "2"])
        config = load_config(args)
        self.assertEqual((config.users, config.seed, config.detector), (2, 9, "lmmse"))

    def test_preset_layering(self):
        args = build_parser().parse_args(["run", "--preset", "paper-fig2", "--extended"])
        config = load_config(args)
        self.assertEqual((config.users, config.iterations, config.search_params().p_min), (19, 20, 128))
        args = build_parser().parse_args(["run", "--preset", "paper-fig2", "--users", "12", "--pmin", "8",
                                          "--max-log"])
        config = load_config(args)
        self.assertEqual((config.users, config.search_params().p_min, config.max_log), (12, 8, True))

    def test_sweep_and_bound(self):
        argv = ["sweep"] + SMALL + ["--users-list", "1,2", "--ebn0-list", "3", "--out", self.path("s.csv")]
        self.assertEqual(main(argv), 0)
        self.assertEqual(len(self.read_lines("s.csv")), 1 + 2 * 2)
        self.assertEqual(main(["bound"] + SMALL + ["--out", self.path("b.csv")]), 0)
        self.assertTrue(self.read_lines("b.csv")[1].startswith("talg,1,4,"))

    def test_invalid_configuration_exits_2(self):
        err = io.StringIO()
        with contextlib.redirect_stderr(err):
            self.assertEqual(main(["run"] + SMALL + ["--frames", "0"]), 2)
        self.assertIn("frames", err.getvalue())
        with open(self.path("bad.json"), "w") as fp:
            json.dump({"colour": 1}, fp)
        with contextlib.redirect_stderr(io.StringIO()):
            self.assertEqual(main(["run", "--config", self.path("bad.json")]), 2)

    def test_malformed_config_files_exit_2(self):
        contents = ["{not json", "[1, 2]", '{"ebn0_db": "5"}', '{"t_threshold": "x"}',
                    '{"generators": 5}', '{"generators": ["09", "07"]}', '{"seed": -1}',
                    '{"floor": null}', '{"rho_margin": "1"}']
        for i, text in enumerate(contents):
            name = self.path("bad%d.json" % i)
            with open(name, "w") as fp:
                fp.write(text)
            err = io.StringIO()
            with contextlib.redirect_stderr(err):
                self.assertEqual(main(["run"] + SMALL + ["--config", name]), 2, text)
            self.assertTrue(err.getvalue().startswith("mudsim: "), text)
            self.assertEqual(len(err.getvalue().strip().splitlines()), 1, text)

    def test_bad_flags_exit_2(self):
        with contextlib.redirect_stderr(io.StringIO()):
            self.assertEqual(main(["run"] + SMALL + ["--seed", "-1"]), 2)
            self.assertEqual(main(["run"] + SMALL + ["--extended"]), 2)
            with self.assertRaises(SystemExit) as cm:
                main(["sweep"] + SMALL + ["--users-list", "1.5"])
        self.assertEqual(cm.exception.code, 2)
        args = build_parser().parse_args(["sweep", "--users-list", "1,3"])
        self.assertEqual(args.users_list, [1, 3])

    def test_io_failure_exits_1(self):
        with contextlib.redirect_stderr(io.StringIO()):
            self.assertEqual(main(["run"] + SMALL + ["--out", self.path("no/such/dir.csv")]), 1)
            self.assertEqual(main(["run", "--config", self.path("missing.json")]), 1)


if __name__ == '__main__':
    unittest.main()
