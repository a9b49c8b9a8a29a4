// pcsim: config-driven front end for the simulation and analysis library.
#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pcsim/cli/experiments.hpp"

namespace {

using namespace pcsim;
namespace fs = std::filesystem;

constexpr int kOk = 0, kRuntime = 1, kUsage = 2;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = cli::default_threads();
  bool dry_run = false;
  bool quiet = false;
};

fs::path output_dir(const cli::RunConfig& c, const Flags& f) {
  if (!f.out.empty()) return f.out;
  if (c.output_dir) return *c.output_dir;
  const char* root = std::getenv("PCSIM_OUTPUT_ROOT");
  const fs::path base = root && *root ? fs::path(root) : fs::path("pcsim-out");
  return base / (c.experiment + "-" + cli::config_hash(c).substr(0, 12));
}

int run(const std::string& sub, const Flags& f) {
  cli::ValidationResult v;
  try {
    const fs::path cfg(f.config);
    if (!fs::exists(cfg)) {
      std::cerr << "error: config file '" << f.config << "' does not exist\n";
      return kUsage;
    }
    io::json j;
    try {
      j = io::json::parse(io::read_text(cfg));
    } catch (const io::json::parse_error& e) {
      std::cerr << "error: " << f.config << " is not valid JSON: " << e.what() << '\n';
      return kUsage;
    }
    if (!j.is_object()) {
      std::cerr << "error: " << f.config << ": top level must be an object\n";
      return kUsage;
    }
    if (f.seed) j["seed"] = *f.seed;
    const fs::path base = cfg.has_parent_path() ? cfg.parent_path() : fs::current_path();
    v = cli::validate_config(j, base, sub == "validate" ? std::string{} : sub);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  if (!v.ok()) {
    std::cerr << f.config << ": " << v.errors.size() << " error(s)\n";
    for (const auto& e : v.errors) std::cerr << "  " << e << '\n';
    return kUsage;
  }
  const auto& c = v.config;
  if (sub == "validate") {
    std::cout << cli::canonical_text(c);
    return kOk;
  }

  cli::RunContext ctx;
  ctx.out_dir = output_dir(c, f);
  ctx.threads = f.threads;
  ctx.log = f.quiet ? nullptr : &std::cerr;
  try {
    if (f.dry_run) {
      cli::dry_run(c, ctx);
      ctx.say("dry run: planned outputs listed in " + (ctx.out_dir / "manifest.json").string());
      return kOk;
    }
    ctx.say(sub + " -> " + ctx.out_dir.string() + " (config " + cli::config_hash(c).substr(0, 12) + ")");
    const auto m = cli::execute(c, ctx);
    ctx.say("wrote " + std::to_string(m["outputs"].size()) + " file(s) and manifest.json in " +
            io::fmt(m["wall_time_s"].get<double>()) + " s");
    return kOk;
  } catch (const cli::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photonic crystal cavity emission simulator and photon statistics toolkit"};
  app.set_version_flag("--version", std::string(pcsim::kVersion));
  app.require_subcommand(1);
  Flags f;
  std::string chosen;
  std::vector<std::string> subs = pcsim::cli::experiment_kinds();
  subs.push_back("validate");
  for (const auto& name : subs) {
    auto* s = app.add_subcommand(name, name == "validate" ? "check a config and print its canonical form" : "run the " + name + " experiment");
    s->add_option("--config", f.config, "config file (JSON)")->required();
    if (name != "validate") {
      s->add_option("--out", f.out, "output directory (default: $PCSIM_OUTPUT_ROOT/<experiment>-<hash>)");
      s->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
      s->add_flag("--dry-run", f.dry_run, "write the manifest of planned outputs without running");
      s->add_flag("--quiet", f.quiet, "no progress log");
    }
    s->add_option("--seed", f.seed, "seed, overrides the config");
    s->callback([&chosen, name] { chosen = name; });
  }
  if (argc > 1 && argv[1][0] != '-' && std::find(subs.begin(), subs.end(), argv[1]) == subs.end()) {
    std::cerr << "error: unknown experiment kind '" << argv[1] << "'\n" << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  return run(chosen, f);
}
