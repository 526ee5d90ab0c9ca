#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "bohmwg/cliio.hpp"

using namespace bohmwg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bohmwg_cliio_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::set<std::string> files_under(const fs::path& root) {
  std::set<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.insert(fs::relative(e.path(), root).generic_string());
  return out;
}

// A small waveguide run that finishes in well under a second.
RunConfig tiny(const fs::path& out) {
  RunConfig c = parse_config(
      "[grid]\nnx = 256\nny = 128\n"
      "[propagation]\ndt = 1e-3\nt_final = 0.1\nsnapshot_stride = 20\n"
      "[trajectory]\nforward_count = 4\nseeds_per_station = 2\n"
      "[equivariance]\nparticles = 400\nt_check = 0.06\ncoarse_bins = 4\n");
  c.output = out;
  return c;
}

std::string parse_error_text(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ConfigParse, EmptyTextGivesTheReferenceSetup) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c, RunConfig{});
  EXPECT_DOUBLE_EQ(c.geometry.v_step, 162.0);
  EXPECT_DOUBLE_EQ(c.geometry.v_barrier, 18.0);
  EXPECT_DOUBLE_EQ(c.geometry.barrier_width, 1.0);
  EXPECT_DOUBLE_EQ(c.geometry.eps, 0.05);
  EXPECT_DOUBLE_EQ(c.packet.sigma, 0.5);
  EXPECT_DOUBLE_EQ(c.packet.p0, 12.0);
  EXPECT_DOUBLE_EQ(c.propagation.t_final, 5.0);
  EXPECT_DOUBLE_EQ(c.propagation.dt, 1e-4);
}

TEST(ConfigParse, SectionsCommentsAndWhitespace) {
  const RunConfig c = parse_config(
      "# leading comment\n"
      "[ geometry ]\n"
      "  v_step   =  150   # trailing comment\n"
      "\n"
      "[run]\r\n"
      "mode = equiv\n"
      "seed = 42\n"
      "[trajectory]\n"
      "stations = 4, 8.5 ,16\n");
  EXPECT_DOUBLE_EQ(c.geometry.v_step, 150.0);
  EXPECT_EQ(c.mode, RunMode::equivariance);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.trajectory.stations, (std::vector<double>{4.0, 8.5, 16.0}));
}

TEST(ConfigParse, FullyQualifiedKeysWorkWithoutSection) {
  const RunConfig c = parse_config("packet.p0 = 10\n");
  EXPECT_DOUBLE_EQ(c.packet.p0, 10.0);
}

TEST(ConfigErrors, NegativeStepReportsLineAndKey) {
  try {
    parse_config("[propagation]\ndt = -1\n");
    FAIL() << "no error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("propagation.dt"), std::string::npos);
  }
}

TEST(ConfigErrors, MisspelledKeySuggestsTheNearestOne) {
  const std::string msg = parse_error_text("[geometry]\nvstep = 100\n");
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("did you mean 'geometry.v_step'"), std::string::npos) << msg;
}

TEST(ConfigErrors, UnknownSectionDuplicateKeyAndBadValues) {
  EXPECT_NE(parse_error_text("[geometri]\n").find("line 1"), std::string::npos);
  EXPECT_NE(parse_error_text("[grid]\nnx = 64\nnx = 128\n").find("line 3"), std::string::npos);
  EXPECT_NE(parse_error_text("[grid]\nnx = many\n").find("grid.nx"), std::string::npos);
  EXPECT_NE(parse_error_text("[grid]\nnx = 12.5\n").find("grid.nx"), std::string::npos);
  EXPECT_NE(parse_error_text("[packet]\nsigma = nan\n").find("packet.sigma"), std::string::npos);
  EXPECT_NE(parse_error_text("[run]\nmode = fly\n").find("run.mode"), std::string::npos);
  EXPECT_NE(parse_error_text("just words\n").find("line 1"), std::string::npos);
  EXPECT_NE(parse_error_text("[grid\n").find("line 1"), std::string::npos);
}

TEST(ConfigErrors, CrossChecksPointAtTheOffendingLine) {
  try {
    parse_config("[grid]\nx_min = 0\nx_max = 10\n");
    FAIL() << "grid not covering the guides was accepted";
  } catch (const ParseError& e) {
    EXPECT_GE(e.line(), 2);
  }
  EXPECT_THROW(parse_config("[geometry]\nv_wall = 100\n"), ParseError);  // wall below the step
  EXPECT_THROW(parse_config("[propagation]\nt_final = 1e-5\n"), ParseError);
  EXPECT_THROW(parse_config("[trajectory]\nstations = 60\n"), ParseError);
}

TEST(ConfigErrors, FileErrorsNameTheFile) {
  const fs::path dir = scratch("bad_file");
  fs::create_directories(dir);
  const fs::path f = dir / "bad.conf";
  std::ofstream(f) << "[geometry]\nvstep = 1\n";
  try {
    load_config_file(f);
    FAIL();
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_EQ(msg.find(f.string() + ":2: unknown key"), 0u) << msg;
  }
  EXPECT_THROW(load_config_file(dir / "missing.conf"), IoError);
  fs::remove_all(dir);
}

TEST(ConfigEcho, DefaultsRoundTrip) {
  const RunConfig c;
  EXPECT_EQ(parse_config(echo_config(c)), c);
  for (const std::string& key : config_keys())
    EXPECT_NE(echo_config(c).find(key.substr(key.find('.') + 1) + " = "), std::string::npos) << key;
}

// Random valid configurations survive echo then parse unchanged.
TEST(ConfigEcho, RandomConfigsRoundTrip) {
  std::mt19937_64 rng(2024);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](std::size_t a, std::size_t b) { return std::uniform_int_distribution<std::size_t>(a, b)(rng); };
  for (int trial = 0; trial < 200; ++trial) {
    RunConfig c;
    c.mode = static_cast<RunMode>(pick(0, 3));
    c.seed = rng();
    c.output = "out_" + std::to_string(pick(0, 999));
    c.units.hbar = uni(0.5, 2.0);
    c.units.mass = uni(0.5, 2.0);
    c.geometry.v_step = uni(50.0, 500.0);
    c.geometry.v_barrier = uni(1.0, 40.0);
    c.geometry.eps = uni(0.01, 0.2);
    c.grid.nx = pick(8, 4096);
    c.grid.ny = pick(8, 2048);
    c.grid.x_min = uni(-80.0, -55.0);
    c.grid.x_max = uni(55.0, 80.0);
    c.packet.x0 = uni(-20.0, -5.0);
    c.packet.y0 = uni(5.0, 15.0);
    c.packet.sigma = uni(0.2, 1.0);
    c.packet.p0 = uni(-20.0, 20.0);
    c.propagation.dt = uni(1e-5, 1e-3);
    c.propagation.snapshot_stride = pick(1, 500);
    c.trajectory.stations.assign(pick(1, 5), 0.0);
    for (double& s : c.trajectory.stations) s = uni(0.5, 49.5);
    c.trajectory.refine_x = pick(1, 8);
    c.trajectory.backward_rho_floor = uni(0.0, 1e-10);
    c.equivariance.particles = pick(1, 100000);
    c.well.v0 = uni(1.0, 100.0);
    c.dw1d.half_width = trial % 2 ? 0.0 : uni(5.0, 50.0);
    const std::string text = echo_config(c);
    ASSERT_EQ(parse_config(text), c) << text;
  }
}

TEST(ConfigPresets, PresetsDifferOnlyInResolution) {
  RunConfig desk, paper;
  apply_preset(desk, Preset::desk);
  apply_preset(paper, Preset::paper);
  EXPECT_EQ(desk.grid.nx, 768u);
  EXPECT_EQ(desk.grid.ny, 256u);
  EXPECT_EQ(paper.grid.nx, 3072u);
  EXPECT_EQ(paper.grid.ny, 1024u);
  EXPECT_EQ(desk.geometry, paper.geometry);
  EXPECT_EQ(desk.packet, paper.packet);
  EXPECT_DOUBLE_EQ(desk.propagation.t_final, paper.propagation.t_final);
  EXPECT_NO_THROW(validate(desk));
  EXPECT_NO_THROW(validate(paper));
  EXPECT_EQ(parse_preset("desk"), Preset::desk);
  EXPECT_FALSE(parse_preset("laptop"));
}

TEST(ConfigPresets, FileOverridesPresetKeyByKey) {
  RunConfig base;
  apply_preset(base, Preset::desk);
  const RunConfig c = parse_config("[grid]\nnx = 512\n", base);
  EXPECT_EQ(c.grid.nx, 512u);
  EXPECT_EQ(c.grid.ny, 256u);
  EXPECT_DOUBLE_EQ(c.propagation.dt, 5e-4);
}

TEST(Manifest, FormatListsEverySection) {
  RunManifest m;
  m.mode = "sim2d";
  m.add_result("steps", std::size_t{12});
  m.add_result("drift", 1.5e-13);
  m.files = {"a.csv", "b/c.csv"};
  m.config_echo = echo_config(RunConfig{});
  const std::string s = format_manifest(m);
  for (const char* needle : {"[run]", "[results]", "[files]", "[config]", "steps = 12", "drift = 1.5e-13", "b/c.csv"})
    EXPECT_NE(s.find(needle), std::string::npos) << needle;
  EXPECT_EQ(m.numeric("drift"), 1.5e-13);
  EXPECT_FALSE(m.numeric("missing"));
  EXPECT_EQ(m.exit_code(), 0);
  m.status = "aborted";
  EXPECT_EQ(m.exit_code(), 2);
  m.status = "failed";
  EXPECT_EQ(m.exit_code(), 3);
}

TEST(Sim2dRun, ManifestListsExactlyTheFilesWritten) {
  const fs::path out = scratch("sim_manifest");
  const RunManifest m = run_sim2d(tiny(out));
  EXPECT_EQ(m.status, "ok");
  const std::set<std::string> listed(m.files.begin(), m.files.end());
  EXPECT_EQ(listed.size(), m.files.size()) << "duplicate entries";
  EXPECT_EQ(files_under(out), listed);
  EXPECT_TRUE(listed.count("manifest_sim2d.txt"));
  EXPECT_TRUE(listed.count("snapshots/index.csv"));
  EXPECT_EQ(m.numeric("snapshots"), 6.0);
  EXPECT_LT(*m.numeric("max_norm_drift"), 1e-10);
  fs::remove_all(out);
}

TEST(Sim2dRun, IdenticalInputsGiveIdenticalBytes) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const RunManifest ma = run_sim2d(tiny(a));
  run_sim2d(tiny(b));
  for (const std::string& f : ma.files) {
    if (f.rfind("manifest_", 0) == 0) continue;  // holds timestamps and output paths
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Sim2dRun, NormToleranceBreachAbortsWithPartialOutput) {
  const fs::path out = scratch("abort");
  RunConfig c = tiny(out);
  c.propagation.norm_tolerance = 1e-300;
  const RunManifest m = run_sim2d(c);
  EXPECT_EQ(m.status, "aborted");
  EXPECT_EQ(m.exit_code(), 2);
  EXPECT_FALSE(m.diagnostics.empty());
  EXPECT_TRUE(fs::exists(out / m.file_name()));
  EXPECT_EQ(files_under(out), std::set<std::string>(m.files.begin(), m.files.end()));
  fs::remove_all(out);
}

TEST(Sim2dRun, UnwritableOutputIsAnIoError) {
  const fs::path blocker = scratch("blocker");
  std::ofstream(blocker) << "x";
  EXPECT_THROW(run_sim2d(tiny(blocker / "sub")), IoError);
  fs::remove(blocker);
}

TEST(TrajRun, ReadsSnapshotsAndLogsEveryPath) {
  const fs::path out = scratch("traj");
  RunConfig c = tiny(out);
  ASSERT_EQ(run_sim2d(c).status, "ok");
  const RunManifest m = run_traj(c);
  EXPECT_EQ(m.status, "ok");
  EXPECT_EQ(m.numeric("forward_count"), 4.0);
  EXPECT_EQ(m.numeric("backward_count"), 6.0);
  std::ifstream idx(out / "trajectories" / "index.csv");
  std::string line;
  std::getline(idx, line);
  EXPECT_EQ(line, "set,index,x0,y0,t_end,x_end,y_end,termination,reflected,crossed");
  int rows = 0;
  while (std::getline(idx, line)) ++rows;
  EXPECT_EQ(rows, 10);
  EXPECT_EQ(files_under(out).count("trajectories/backward_005.csv"), 1u);
  fs::remove_all(out);
}

TEST(TrajRun, MissingSnapshotsIsAnIoError) {
  const fs::path out = scratch("traj_missing");
  EXPECT_THROW(run_traj(tiny(out)), IoError);
  fs::remove_all(out);
}

TEST(EquivarianceRun, WritesStatistics) {
  const fs::path out = scratch("equiv");
  RunConfig c = tiny(out);
  ASSERT_EQ(run_sim2d(c).status, "ok");
  const RunManifest m = run_equivariance(c);
  EXPECT_EQ(m.status, "ok");
  EXPECT_EQ(m.numeric("n_particles"), 400.0);
  const double ks = *m.numeric("ks_x");
  EXPECT_GE(ks, 0.0);
  EXPECT_LE(ks, 1.0);
  EXPECT_TRUE(fs::exists(out / "equivariance.txt"));
  fs::remove_all(out);
}

TEST(Dw1dRun, WritesLevelsTableAndTrajectories) {
  const fs::path out = scratch("dw1d");
  RunConfig c = parse_config(
      "[run]\nmode = dw1d\n[well]\nv0 = 5\nwidth = 1\nseparation = 1\n"
      "[dw1d]\ngrid_points = 512\ntable_points = 11\ntrajectories = 3\ntrajectory_samples = 50\n");
  c.output = out;
  const RunManifest m = run(c);
  EXPECT_EQ(m.status, "ok");
  const std::set<std::string> files = files_under(out);
  for (const char* f : {"levels.txt", "population.csv", "barrier_current.csv", "trajectories/index.csv",
                        "trajectories/traj_002.csv", "manifest_dw1d.txt"})
    EXPECT_TRUE(files.count(f)) << f;
  EXPECT_EQ(files, std::set<std::string>(m.files.begin(), m.files.end()));
  EXPECT_NEAR(*m.numeric("tunnel_period"), 40.01996442233189, 1e-6);
  fs::remove_all(out);
}

TEST(Render, ConstantFieldIsUniform) {
  const Grid2D g = make_grid(16, 8, 2.0, 2.0, -1.0, -1.0);
  ComplexField2D f(g, cplx{2.0, 0.0});
  for (bool log_scale : {true, false}) {
    RenderOptions opt;
    opt.log_scale = log_scale;
    const Image img = render_heatmap(f, opt);
    ASSERT_EQ(img.rgb.size(), 3u * 16 * 8);
    for (std::size_t r = 0; r < img.height; ++r)
      for (std::size_t c = 0; c < img.width; ++c) EXPECT_EQ(img.pixel(c, r), img.pixel(0, 0));
    EXPECT_EQ(img.pixel(0, 0), colour(opt.colormap, 1.0));
  }
}

TEST(Render, ZerosAndNonFiniteValuesGiveTheFloorColour) {
  const Grid2D g = make_grid(8, 8, 2.0, 2.0, -1.0, -1.0);
  ComplexField2D f(g);
  f[3] = cplx{std::nan(""), 0.0};
  const Image img = render_heatmap(f);
  for (std::size_t k = 0; k < img.rgb.size(); ++k) EXPECT_EQ(img.rgb[k], 0);
}

TEST(Render, TopRowIsLargestY) {
  const Grid2D g = make_grid(4, 4, 4.0, 4.0, 0.0, 0.0);
  ComplexField2D f(g);
  for (std::size_t i = 0; i < 4; ++i) f(i, 3) = cplx{1.0, 1.0};
  RenderOptions opt;
  opt.colormap = Colormap::gray;
  const Image img = render_heatmap(f, opt);
  EXPECT_EQ(img.pixel(0, 0), (std::array<std::uint8_t, 3>{255, 255, 255}));
  EXPECT_EQ(img.pixel(0, 3), (std::array<std::uint8_t, 3>{0, 0, 0}));
}

TEST(Render, OutlineInksTheGuideEdges) {
  const GridSpec spec;
  const Grid2D g = make_grid(240, 96, spec.x_max - spec.x_min, spec.y_max - spec.y_min, spec.x_min, spec.y_min);
  ComplexField2D f(g);
  RenderOptions opt;
  opt.outline = WaveguideGeometry{};
  const Image img = render_heatmap(f, opt);
  std::size_t inked = 0;
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t c = 0; c < img.width; ++c)
      inked += img.pixel(c, r) == std::array<std::uint8_t, 3>{0, 255, 255};
  EXPECT_GT(inked, 200u);
}

TEST(Render, PpmFileHasHeaderAndPayload) {
  const fs::path dir = scratch("ppm");
  fs::create_directories(dir);
  const Grid2D g = make_grid(10, 6, 2.0, 2.0, -1.0, -1.0);
  write_cf2d_file(dir / "f.cf2d", ComplexField2D(g, cplx{1.0, 0.5}));
  render_heatmap_file(dir / "f.cf2d", dir / "f.ppm");
  const std::string bytes = slurp(dir / "f.ppm");
  const std::string header = "P6\n10 6\n255\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  EXPECT_EQ(bytes.size(), header.size() + 3u * 10 * 6);
  EXPECT_FALSE(fs::exists(dir / "f.ppm.tmp"));
  EXPECT_THROW(render_heatmap_file(dir / "absent.cf2d", dir / "g.ppm"), IoError);
  fs::remove_all(dir);
}
