#include "hsdetect/cli.hpp"
#include "test_support.hpp"

#include <fstream>
#include <sstream>

using namespace hsd;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// A small, well separated scene written by `synth`.
fs::path make_scene(const std::string& tag) {
  const auto dir = test::scratch_dir("cli_" + tag);
  std::ofstream(dir / "scene.txt") << "lines = 40\nsamples = 50\nbands = 12\ntarget_pixels = 120\n"
                                      "background_scale = 0.02\ntarget_covariance_scale = 0.005\n"
                                      "template_perturbation = 0.1\nseed = 3\n";
  const auto r = cli({"synth", "--scene", (dir / "scene.txt").string(), "--out", dir.string(), "--name", "s"});
  REQUIRE(r.code == 0);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes by category") {
  CHECK(exit_code(ErrorCategory::Config) == 2);
  CHECK(exit_code(ErrorCategory::Data) == 3);
  CHECK(exit_code(ErrorCategory::Numeric) == 4);
  CHECK(cli({}).code == 2);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"frobnicate"}).code == 2);
}

TEST_CASE("inspect") {
  const auto fx = test::fixture_dir() / "envi";
  const auto r = cli({"inspect", (fx / "valid_bsq_float32.hdr").string()});
  CHECK(r.code == 0);
  CHECK(r.out.starts_with("4×2×3 bsq float32\n"));
  CHECK(r.out.find("wavelengths:") != std::string::npos);

  const auto wl = cli({"inspect", (fx / "valid_multiline_wavelengths.hdr").string()});
  CHECK(wl.code == 0);
  CHECK(wl.out.find(" nm (3 bands)") != std::string::npos);

  CHECK(cli({"inspect", (fx / "no_such.hdr").string()}).code == 2);
  const auto bad = cli({"inspect", (fx / "error_MissingMagic_absent.hdr").string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("MissingMagic") != std::string::npos);
}

TEST_CASE("synth, detect, evaluate and report") {
  const auto dir = make_scene("pipeline");
  for (const char* f : {"s.hdr", "s.raw", "s_mask.csv", "s_library.csv", "s_scene.txt"}) CHECK(fs::exists(dir / f));
  const auto img = (dir / "s.hdr").string();
  const auto mask = (dir / "s_mask.csv").string();
  const auto lib = (dir / "s_library.csv").string();
  const auto out = (dir / "runs").string();

  const auto ideal = cli({"detect", img, "--mask", mask, "--scenario", "ideal-mf", "--out", out});
  REQUIRE(ideal.code == 0);
  CHECK(ideal.out.find("AUC_PR 1.0000") != std::string::npos);

  const auto two = cli({"detect", img, "--mask", mask, "--scenario", "two-stage", "--library", lib,
                        "--library-index", "2", "--n-pixels", "60", "--out", out});
  REQUIRE(two.code == 0);
  for (const char* f : {"s_two-stage.hdr", "s_two-stage_pr.csv", "s_two-stage_roc.csv", "s_two-stage_metrics.csv",
                        "s_mask.csv"}) {
    CHECK(fs::exists(dir / "runs" / f));
  }
  CHECK(slurp(dir / "runs" / "s_two-stage_metrics.csv")
            .starts_with("image,scenario,auc_roc,auc_pr,prevalence,eta,tp,fp,fn,tn\ns,two-stage,"));

  const auto ev = cli({"evaluate", (dir / "runs" / "s_ideal-mf.hdr").string(), "--mask", mask, "--out",
                       (dir / "eval").string()});
  CHECK(ev.code == 0);
  CHECK(fs::exists(dir / "eval" / "s_ideal-mf_detection.png"));

  const auto rep = cli({"report", out});
  REQUIRE(rep.code == 0);
  CHECK(rep.out.find("s compare:") != std::string::npos);
  for (const char* f : {"s_compare.png", "s_pr.svg", "s_roc.svg", "s_ideal-mf_pr.svg", "s_two-stage_detection.png"}) {
    CHECK(fs::exists(dir / "runs" / f));
  }
}

TEST_CASE("two-stage averaging every pixel is a numeric failure") {
  const auto dir = make_scene("degenerate");
  const auto r = cli({"detect", (dir / "s.hdr").string(), "--mask", (dir / "s_mask.csv").string(), "--scenario",
                      "two-stage", "--library", (dir / "s_library.csv").string(), "--n-pixels", "2000", "--out",
                      (dir / "runs").string()});
  CHECK(r.code == 4);
  CHECK(r.err.find("DegenerateTarget") != std::string::npos);
}

TEST_CASE("report failures") {
  const auto empty = test::scratch_dir("cli_empty");
  CHECK(cli({"report", empty.string()}).code == 3);
  CHECK(cli({"report", (empty / "missing").string()}).code == 3);

  const auto dir = make_scene("no_ideal");
  const auto r = cli({"detect", (dir / "s.hdr").string(), "--mask", (dir / "s_mask.csv").string(), "--scenario",
                      "two-stage", "--library", (dir / "s_library.csv").string(), "--n-pixels", "60", "--out",
                      (dir / "runs").string()});
  REQUIRE(r.code == 0);
  CHECK(cli({"report", (dir / "runs").string()}).code == 3);
}

TEST_CASE("outputs do not depend on the thread count") {
  const auto dir = make_scene("threads");
  for (const char* t : {"1", "3"}) {
    const auto r = cli({"detect", (dir / "s.hdr").string(), "--mask", (dir / "s_mask.csv").string(), "--scenario",
                        "two-stage", "--library", (dir / "s_library.csv").string(), "--n-pixels", "60",
                        "--threads", t, "--out", (dir / ("t" + std::string(t))).string()});
    REQUIRE(r.code == 0);
  }
  for (const char* f : {"s_two-stage.raw", "s_two-stage_pr.csv", "s_two-stage_metrics.csv"}) {
    CHECK(slurp(dir / "t1" / f) == slurp(dir / "t3" / f));
  }
}

TEST_CASE("preprocess and sweeps") {
  const auto dir = make_scene("misc");
  const auto pre = cli({"preprocess", (dir / "s.hdr").string(), "--out", (dir / "pre").string(), "--name", "p"});
  CHECK(pre.code == 0);
  CHECK(fs::exists(dir / "pre" / "p.hdr"));

  const auto sn = cli({"sweep-n", (dir / "s.hdr").string(), "--mask", (dir / "s_mask.csv").string(), "--n",
                       "60,60,50%", "--library", (dir / "s_library.csv").string(), "--library-index", "2"});
  CHECK(sn.code == 0);
  CHECK(sn.out.starts_with("N_rule,N,auc_pr\n"));
  std::istringstream rows(sn.out);
  std::string header, a, b, c;
  std::getline(rows, header);
  std::getline(rows, a);
  std::getline(rows, b);
  std::getline(rows, c);
  CHECK(a == b);
  CHECK(c.substr(c.find(',')) == a.substr(a.find(',')));

  const auto st = cli({"sweep-t", "--scene", (dir / "scene.txt").string(), "--t", "40,80", "--n", "50%",
                       "--repetitions", "2", "--out", (dir / "t.csv").string()});
  CHECK(st.code == 0);
  CHECK(slurp(dir / "t.csv").starts_with("T,N,auc_pr_mean,auc_pr_sd,auc_pr_0,auc_pr_1\n40,20,"));

  CHECK(cli({"sweep-t", "--scene", (dir / "scene.txt").string(), "--t", "40", "--n", "0"}).code == 2);
}

}  // TEST_SUITE
