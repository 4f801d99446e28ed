// Experiment runner CLI: validate manifests, list figure presets, and run
// simulated plus analytic BER curves to CSV or JSON.
//
// Exit codes: 0 success, 2 invalid manifest, 3 runtime failure (no partial
// output file is left behind).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "stbclora/manifest.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A manifest argument is either a file or a bare preset name.
std::string load_manifest_text(const std::string& arg) {
  if (std::filesystem::exists(arg)) return read_file(arg);
  if (stbclora::preset_text(arg)) return "preset = " + arg + "\n";
  throw std::runtime_error("'" + arg + "' is neither a file nor a preset name");
}

void print_diagnostics(const std::string& source, const std::vector<stbclora::Diagnostic>& diags) {
  for (const auto& d : diags) {
    if (d.line > 0)
      std::cerr << source << ":" << d.line << ": " << d.message << "\n";
    else
      std::cerr << source << ": " << d.message << "\n";
  }
}

int run_command(const std::string& manifest_arg, bool analytic_only, std::string out_override,
                std::string format_override, std::uint64_t seed_override, bool seed_given,
                int workers) {
  std::string text;
  try {
    text = load_manifest_text(manifest_arg);
  } catch (const std::exception& ex) {
    std::cerr << ex.what() << "\n";
    return 2;
  }
  std::vector<stbclora::Diagnostic> diags;
  stbclora::RunManifest manifest = stbclora::parse_manifest(text, diags);
  if (!diags.empty()) {
    print_diagnostics(manifest_arg, diags);
    return 2;
  }
  if (analytic_only) manifest.with_sim = false;
  if (!out_override.empty()) manifest.out_path = out_override;
  if (seed_given) manifest.seed = seed_override;
  if (!format_override.empty())
    manifest.format = format_override == "json" ? stbclora::RunManifest::Format::json
                                                : stbclora::RunManifest::Format::csv;

  const std::string tmp_path = manifest.out_path + ".tmp";
  try {
    const auto records = stbclora::run(manifest, workers);
    {
      std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write '" + tmp_path + "'");
      if (manifest.format == stbclora::RunManifest::Format::csv)
        stbclora::write_csv(out, records);
      else
        stbclora::write_json(out, manifest, records);
      if (!out) throw std::runtime_error("write failed for '" + tmp_path + "'");
    }
    std::filesystem::rename(tmp_path, manifest.out_path);
    std::cout << records.size() << " records (" << manifest.curves.size() << " curves x "
              << manifest.snr_grid_db.size() << " points) -> " << manifest.out_path << "\n";
    return 0;
  } catch (const std::exception& ex) {
    std::error_code ec;
    std::filesystem::remove(tmp_path, ec);
    std::cerr << "run failed: " << ex.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STBC-MIMO LoRa link simulator and analytic BER toolkit"};
  app.require_subcommand(1);

  std::string manifest_arg;
  bool analytic_only = false;
  std::string out_override, format_override;
  std::uint64_t seed_override = 0;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  auto* run_cmd = app.add_subcommand("run", "execute a manifest (file or preset name)");
  run_cmd->add_option("manifest", manifest_arg, "manifest path or preset name")->required();
  run_cmd->add_flag("--analytic-only", analytic_only, "skip Monte Carlo simulation");
  run_cmd->add_option("--out", out_override, "override the output path");
  run_cmd->add_option("--format", format_override, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  auto* seed_opt = run_cmd->add_option("--seed", seed_override, "override the master seed");
  run_cmd->add_option("--workers", workers, "simulation worker threads")
      ->check(CLI::PositiveNumber);

  std::string validate_arg;
  auto* validate_cmd = app.add_subcommand("validate", "check a manifest without running");
  validate_cmd->add_option("manifest", validate_arg, "manifest path or preset name")->required();

  std::string preset_action;
  auto* preset_cmd = app.add_subcommand("preset", "figure preset utilities");
  preset_cmd->add_option("action", preset_action, "'list'")->required();

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) {
    return run_command(manifest_arg, analytic_only, out_override, format_override, seed_override,
                       seed_opt->count() > 0, workers);
  }
  if (validate_cmd->parsed()) {
    std::string text;
    try {
      text = load_manifest_text(validate_arg);
    } catch (const std::exception& ex) {
      std::cerr << ex.what() << "\n";
      return 2;
    }
    std::vector<stbclora::Diagnostic> diags;
    const auto manifest = stbclora::parse_manifest(text, diags);
    if (!diags.empty()) {
      print_diagnostics(validate_arg, diags);
      return 2;
    }
    std::cout << "OK: " << manifest.curves.size() << " curves, " << manifest.snr_grid_db.size()
              << " SNR points\n";
    return 0;
  }
  if (preset_cmd->parsed()) {
    if (preset_action != "list") {
      std::cerr << "unknown preset action '" << preset_action << "' (try 'list')\n";
      return 2;
    }
    for (const auto& [name, body] : stbclora::preset_catalog()) {
      std::vector<stbclora::Diagnostic> diags;
      const auto m = stbclora::parse_manifest(body, diags);
      std::cout << name << ": " << m.curves.size() << " curves, snr "
                << m.snr_grid_db.front() << ".." << m.snr_grid_db.back() << " dB -> "
                << m.out_path << "\n";
    }
    return 0;
  }
  return 0;
}
