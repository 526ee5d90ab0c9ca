#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "bohmwg/cliio.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string preset;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Configuration file (key = value with [sections])")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--preset", f.preset, "Resolution preset applied before the config file")
      ->check(CLI::IsMember({"paper", "desk"}));
}

// defaults, then preset, then config file, then command-line flags
bohmwg::RunConfig resolve(const CommonFlags& f, bohmwg::RunMode mode) {
  bohmwg::RunConfig cfg;
  if (!f.preset.empty()) bohmwg::apply_preset(cfg, *bohmwg::parse_preset(f.preset));
  if (!f.config.empty()) cfg = bohmwg::load_config_file(f.config, cfg);
  cfg.mode = mode;
  if (!f.out.empty()) cfg.output = f.out;
  if (f.seed) cfg.seed = *f.seed;
  bohmwg::validate(cfg);
  return cfg;
}

int report(const bohmwg::RunManifest& m, const bohmwg::RunConfig& cfg) {
  std::cout << m.mode << ": " << m.status << " (" << m.files.size() << " files in " << cfg.output.string() << ")\n";
  for (const auto& [k, v] : m.results) std::cout << "  " << k << " = " << v << '\n';
  for (const std::string& d : m.diagnostics) std::cerr << "  " << d << '\n';
  return m.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohmian trajectories in coupled waveguides"};
  app.set_version_flag("--version", std::string(bohmwg::kVersion));
  app.require_subcommand(1);

  struct Verb {
    const char* name;
    const char* help;
    bohmwg::RunMode mode;
    CommonFlags flags;
    CLI::App* cmd = nullptr;
  };
  Verb verbs[] = {
      {"dw1d", "Two-level double-well model: levels, tunnelling table, barrier current, trajectories",
       bohmwg::RunMode::dw1d, {}},
      {"sim2d", "Propagate the wavepacket through the waveguide and store snapshots", bohmwg::RunMode::sim2d, {}},
      {"traj", "Forward and backward trajectory batches over stored snapshots", bohmwg::RunMode::traj, {}},
      {"equiv", "Born-rule equivariance check over stored snapshots", bohmwg::RunMode::equivariance, {}},
  };
  for (Verb& v : verbs) {
    v.cmd = app.add_subcommand(v.name, v.help);
    add_common(v.cmd, v.flags);
  }

  std::string render_in, render_out, colormap = "heat", geometry_config;
  bool linear = false, outline = false;
  CLI::App* render = app.add_subcommand("render", "Write a PPM heatmap of a CF2D field");
  render->add_option("input", render_in, "CF2D file")->required()->check(CLI::ExistingFile);
  render->add_option("--out", render_out, "Output PPM (default: input with .ppm extension)");
  render->add_option("--colormap", colormap, "gray or heat")->check(CLI::IsMember({"gray", "heat"}));
  render->add_flag("--linear", linear, "Linear scale instead of log10");
  render->add_flag("--outline", outline, "Overlay the guide outlines");
  render->add_option("--config", geometry_config, "Config file whose [geometry] is outlined")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (Verb& v : verbs) {
      if (!v.cmd->parsed()) continue;
      const bohmwg::RunConfig cfg = resolve(v.flags, v.mode);
      return report(bohmwg::run(cfg), cfg);
    }
    if (render->parsed()) {
      bohmwg::RenderOptions opt;
      opt.colormap = *bohmwg::parse_colormap(colormap);
      opt.log_scale = !linear;
      if (outline || !geometry_config.empty()) {
        const bohmwg::RunConfig cfg =
            geometry_config.empty() ? bohmwg::RunConfig{} : bohmwg::load_config_file(geometry_config);
        opt.outline = cfg.geometry;
      }
      std::filesystem::path out = render_out;
      if (out.empty()) out = std::filesystem::path(render_in).replace_extension(".ppm");
      bohmwg::render_heatmap_file(render_in, out, opt);
      std::cout << "wrote " << out.string() << '\n';
      return 0;
    }
  } catch (const bohmwg::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const bohmwg::InvalidArgument& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
