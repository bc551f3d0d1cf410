#include "doctest.h"

#include "schema_check.hpp"

#include "epidelay/cli.hpp"
#include "epidelay/fit.hpp"
#include "epidelay/reporting.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "epidelay");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = epidelay::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("epidelay_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string s(const fs::path& p) { return p.string(); }

std::string pipeline(const fs::path& root) {
  const auto sim = root / "sim";
  const auto ll = s(sim / "linelist.csv");
  REQUIRE(run({"simulate", "--family", "lognormal", "--params", "1,0.5", "--n", "600", "--r", "0.1",
               "--T", "30", "--strata", "sex=f,m", "--seed", "3", "--out", s(sim)})
              .code == 0);
  REQUIRE(run({"fit", "--linelist", ll, "--family", "lognormal", "--real-time", "--out",
               s(root / "fit")})
              .code == 0);
  REQUIRE(run({"fit", "--linelist", ll, "--family", "lognormal", "--adjust", "censoring", "--out",
               s(root / "unadj")})
              .code == 0);
  REQUIRE(run({"compare", "--linelist", ll, "--families", "gamma,lognormal", "--adjust",
               "censoring,truncation", "--out", s(root / "cmp")})
              .code == 0);
  REQUIRE(run({"simulate", "--family", "gamma", "--params", "3,1", "--n", "200", "--delay-name",
               "onset to report", "--seed", "9", "--out", s(root / "other")})
              .code == 0);
  REQUIRE(run({"fit", "--linelist", s(root / "other" / "linelist.csv"), "--family", "gamma", "--out",
               s(root / "ofit")})
              .code == 0);
  const auto r = run({"report", "--linelist", ll, "--fit", s(root / "fit" / "fit.json"), "--unadjusted",
                      s(root / "unadj" / "fit.json"), "--compare", s(root / "cmp" / "fit_gamma.json"),
                      "--compare", s(root / "cmp" / "fit_lognormal.json"), "--other",
                      "onset to report=" + s(root / "ofit" / "fit.json"), "--exposure-note",
                      "One exposure window per case.", "--ppc-samples", "20000", "--out",
                      s(root / "report")});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.out == "checklist score 1\n");
  return slurp(root / "report" / "report.json");
}

} // namespace

TEST_CASE("check prints the decision-tree adjustments") {
  CHECK(run({"check", "--retrospective", "--forward", "--complete"}).out == "{double_censoring}\n");
  CHECK(run({"check", "--real-time"}).out == "{double_censoring, right_truncation}\n");
  CHECK(run({"check", "--retrospective", "--ended-early"}).out ==
        "{double_censoring, right_truncation}\n");
  CHECK(run({"check", "--backward", "--growth-known", "0.1"}).out ==
        "{double_censoring, dynamical(r=0.1)}\n");
  CHECK(run({"check", "--backward"}).code == epidelay::cli::kExitValidation);
  CHECK(run({"check", "--forward", "--backward"}).code == epidelay::cli::kExitValidation);
}

TEST_CASE("simulate, fit and report end to end are byte-identical across runs") {
  const auto a = pipeline(scratch("pipeline_a"));
  const auto b = pipeline(scratch("pipeline_b"));
  CHECK(a == b);
  const auto report = epidelay::report_from_json(a);
  CHECK(epidelay::checklist_score(report).fraction == 1.0);
  CHECK(report.adjustments_applied == "{double_censoring, right_truncation}");
  schema_check::Validator v(schema_check::load(EPIDELAY_SCHEMA_PATH));
  CHECK(v.validate(nlohmann::json::parse(a)).empty());
  const auto root = fs::temp_directory_path() / "epidelay_cli_pipeline_a";
  CHECK(fs::exists(root / "sim" / "truth.csv"));
  CHECK(fs::exists(root / "report" / "report.md"));
  CHECK(fs::exists(root / "report" / "data.csv"));
  CHECK(slurp(root / "report" / "ppc.csv").rfind("bin_lo,bin_hi,observed_freq,predicted_freq\n", 0) == 0);
  CHECK(slurp(root / "cmp" / "comparison.csv").rfind("rank,family,criterion,value,delta,loglik\n1,", 0) == 0);
}

TEST_CASE("unmixed chains exit 3 and the report is flagged") {
  const auto root = scratch("unmixed");
  REQUIRE(run({"simulate", "--family", "normal", "--params", "5,1", "--n", "200", "--out",
               s(root / "sim")})
              .code == 0);
  const auto ll = s(root / "sim" / "linelist.csv");
  const auto f = run({"fit", "--linelist", ll, "--family", "normal", "--method", "mcmc", "--chains", "2",
                      "--warmup", "0", "--samples", "10", "--no-adapt", "--out", s(root / "fit")});
  CHECK(f.code == epidelay::cli::kExitNotConverged);
  CHECK(f.out.find("flag: not converged") != std::string::npos);
  CHECK(fs::exists(root / "fit" / "draws.csv"));
  const auto r = run({"report", "--linelist", ll, "--fit", s(root / "fit" / "fit.json"), "--out",
                      s(root / "report")});
  CHECK(r.code == epidelay::cli::kExitNotConverged);
  const auto report = epidelay::report_from_json(slurp(root / "report" / "report.json"));
  CHECK_FALSE(report.diagnostics.converged);
  CHECK(report.checklist.at("diagnostics") == false);
  CHECK(slurp(root / "report" / "report.md").find("## Checklist gaps") != std::string::npos);
}

TEST_CASE("config files mirror flags") {
  const auto root = scratch("config");
  REQUIRE(run({"simulate", "--params", "2,0.5", "--n", "300", "--out", s(root / "sim")}).code == 0);
  const auto ll = s(root / "sim" / "linelist.csv");
  REQUIRE(run({"fit", "--linelist", ll, "--family", "gamma", "--ci", "0.9", "--seed", "4", "--out",
               s(root / "flags")})
              .code == 0);
  {
    std::ofstream cfg(root / "fit.toml");
    cfg << "[fit]\nlinelist = \"" << ll << "\"\nfamily = \"gamma\"\nci = 0.9\nseed = 4\nout = \""
        << s(root / "config") << "\"\n";
  }
  const auto c = run({"--config", s(root / "fit.toml"), "fit"});
  INFO(c.err);
  REQUIRE(c.code == 0);
  CHECK(slurp(root / "flags" / "fit.json") == slurp(root / "config" / "fit.json"));
}

TEST_CASE("help lists every flag") {
  const std::vector<std::pair<std::string, std::vector<std::string>>> expected = {
      {"simulate", {"--family", "--params", "--mean", "--sd", "--n", "--r", "--duration", "--T",
                    "--width", "--primary-width", "--secondary-width", "--delay-name", "--strata",
                    "--seed", "--verbose", "--out"}},
      {"fit", {"--linelist", "--family", "--method", "--adjust", "--T", "--ci", "--nodes", "--chains",
               "--warmup", "--samples", "--no-adapt", "--sequential", "--negative-policy",
               "--real-time", "--retrospective", "--forward", "--backward", "--growth-known",
               "--ended-early", "--complete", "--seed", "--out"}},
      {"compare", {"--linelist", "--families", "--fits", "--adjust", "--out"}},
      {"report", {"--linelist", "--fit", "--unadjusted", "--compare", "--other", "--negative-policy",
                  "--exposure-note", "--infectors-note", "--no-curve", "--widen", "--ppc-samples",
                  "--out"}},
      {"check", {"--real-time", "--retrospective", "--forward", "--backward", "--growth-known",
                 "--ended-early", "--complete"}},
      {"sbc", {"--truth-family", "--params", "--family", "--replicates", "--candidates", "--ci", "--T",
               "--out"}}};
  for (const auto& [sub, flags] : expected) {
    const auto h = run({sub, "--help"});
    CHECK(h.code == 0);
    for (const auto& flag : flags) {
      INFO(sub, " ", flag);
      CHECK(h.out.find(flag) != std::string::npos);
    }
  }
  const auto top = run({"--help"});
  CHECK(top.out.find("--config") != std::string::npos);
  CHECK(run({"--version"}).out.find(epidelay::kVersion) != std::string::npos);
}

TEST_CASE("validation errors exit 2") {
  const auto root = scratch("errors");
  REQUIRE(run({"simulate", "--params", "2,0.5", "--n", "100", "--out", s(root / "sim")}).code == 0);
  const auto ll = s(root / "sim" / "linelist.csv");
  CHECK(run({"fit", "--linelist", ll, "--adjust", "bogus", "--out", s(root / "f")}).code == 2);
  CHECK(run({"fit", "--linelist", ll, "--adjust", "truncation,dynamical:0.1", "--out", s(root / "f")})
            .code == 2);
  CHECK(run({"fit", "--linelist", ll, "--family", "cauchy", "--out", s(root / "f")}).code == 2);
  CHECK(run({"fit", "--linelist", s(root / "missing.csv"), "--out", s(root / "f")}).code == 2);
  CHECK(run({"fit", "--linelist", ll}).code == 2);
  CHECK(run({"simulate", "--family", "weibull", "--out", s(root / "w")}).code == 2);
  CHECK(run({}).code == 2);
  const auto warn = run({"fit", "--linelist", ll, "--family", "gamma", "--adjust", "censoring",
                         "--real-time", "--out", s(root / "w2")});
  CHECK(warn.code == 0);
  CHECK(warn.err.find("warning") != std::string::npos);
}

TEST_CASE("sbc writes per-replicate rows and a summary") {
  const auto root = scratch("sbc");
  const auto r = run({"sbc", "--truth-family", "lognormal", "--params", "1,0.5", "--n", "300", "--r",
                      "0.1", "--T", "30", "--family", "lognormal", "--adjust", "censoring,truncation",
                      "--replicates", "4", "--candidates", "gamma,lognormal", "--ci", "0.9", "--out",
                      s(root)});
  INFO(r.err);
  CHECK(r.code == 0);
  const auto csv = slurp(root / "sbc.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  const auto summary = nlohmann::json::parse(slurp(root / "sbc_summary.json"));
  CHECK(summary.at("replicates") == 4);
  CHECK(summary.at("covered").get<int>() <= 4);
  const auto again = run({"sbc", "--truth-family", "lognormal", "--params", "1,0.5", "--n", "300", "--r",
                          "0.1", "--T", "30", "--family", "lognormal", "--adjust",
                          "censoring,truncation", "--replicates", "4", "--candidates",
                          "gamma,lognormal", "--ci", "0.9", "--out", s(root / "again")});
  CHECK(slurp(root / "again" / "sbc.csv") == csv);
}
