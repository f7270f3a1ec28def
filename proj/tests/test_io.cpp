#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_util.hpp"

using namespace afflow;
using afflow::test::v;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no afflow::Error thrown";
  return ErrorKind::InvalidArgument;
}

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("afflow_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST_F(IoTest, FieldRoundTripSidecarIsBitExact) {
  const SupportField s = SupportField::sample(GridSpec::cube(2, -1, 0.5, 17), test::generic, 0.25, "gen");
  const auto header = io::write_field(dir_ / "f.json", s);
  EXPECT_EQ(header["encoding"], "f64le");
  EXPECT_TRUE(fs::exists(dir_ / "f.f64"));
  EXPECT_EQ(fs::file_size(dir_ / "f.f64"), s.grid.size() * 8);
  const SupportField r = io::read_field(dir_ / "f.json");
  EXPECT_EQ(r.grid, s.grid);
  EXPECT_EQ(r.values, s.values);
  EXPECT_EQ(r.time, 0.25);
  EXPECT_EQ(r.label, "gen");
}

TEST_F(IoTest, SidecarIsLittleEndianRowMajor) {
  const GridSpec g = GridSpec::cube(2, 0, 1, 9);
  std::vector<double> vals(g.size());
  for (std::size_t f = 0; f < g.size(); ++f) vals[f] = static_cast<double>(f);
  io::write_field(dir_ / "raw.json", SupportField(g, vals, 0.0, ""));
  std::ifstream is(dir_ / "raw.f64", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  // value 1.0 = 0x3FF0000000000000 stored low byte first in slot 1
  ASSERT_GE(bytes.size(), 16u);
  EXPECT_EQ(bytes[15], 0x3F);
  EXPECT_EQ(bytes[14], 0xF0);
  EXPECT_EQ(bytes[8], 0x00);
  // row-major: the last index runs fastest
  EXPECT_EQ(g.flat({0, 1}), 1u);
  EXPECT_EQ(g.flat({1, 0}), 9u);
}

TEST_F(IoTest, FieldRoundTripInline) {
  const SupportField s = SupportField::sample(GridSpec::cube(1, -2, 2, 9), test::unit_sphere, 0.0, "s");
  const auto header = io::write_field(dir_ / "i.json", s, false);
  EXPECT_EQ(header["encoding"], "inline");
  EXPECT_FALSE(fs::exists(dir_ / "i.f64"));
  EXPECT_EQ(io::read_field(dir_ / "i.json").values, s.values);
}

TEST_F(IoTest, FieldErrors) {
  const SupportField s = test::field(1, -1, 1, 9, test::unit_sphere);
  io::write_field(dir_ / "t.json", s);
  fs::resize_file(dir_ / "t.f64", 16);
  EXPECT_EQ(kind_of([&] { io::read_field(dir_ / "t.json"); }), ErrorKind::Io);
  fs::remove(dir_ / "t.f64");
  EXPECT_EQ(kind_of([&] { io::read_field(dir_ / "t.json"); }), ErrorKind::MissingArtifact);
  EXPECT_EQ(kind_of([&] { io::read_field(dir_ / "nope.json"); }), ErrorKind::MissingArtifact);
  io::write_text(dir_ / "bad.json", "{ not json");
  EXPECT_EQ(kind_of([&] { io::read_json(dir_ / "bad.json"); }), ErrorKind::ConfigInvalid);
}

TEST(Grid, JsonRoundTripAndValidation) {
  std::array<double, kMaxDim> lo{-1, -2, 0}, hi{1, 3, 0};
  const GridSpec g(2, lo, hi, 17);
  EXPECT_EQ(io::grid_from_json(io::to_json(g)), g);
  EXPECT_EQ(io::grid_from_json({{"n", 2}, {"lo", -1}, {"hi", 1}, {"m", 9}}), GridSpec::cube(2, -1, 1, 9));
  EXPECT_EQ(kind_of([] { io::grid_from_json({{"n", 4}, {"lo", -1}, {"hi", 1}, {"m", 9}}); }), ErrorKind::ConfigInvalid);
  EXPECT_EQ(kind_of([] { io::grid_from_json({{"n", 2}, {"lo", {-1}}, {"hi", 1}, {"m", 9}}); }), ErrorKind::ConfigInvalid);
  EXPECT_EQ(kind_of([] { io::grid_from_json({{"n", 2}, {"lo", -1}, {"hi", 1}, {"m", 5}}); }), ErrorKind::ConfigInvalid);
}

TEST_F(IoTest, CsvRoundTripIncludingNan) {
  io::Table t;
  t.add("t", {0.0, 0.1, 1.0 / 3.0});
  t.add("gap", {std::nan(""), 1e-300, -2.5});
  io::write_csv(dir_ / "x.csv", t);
  EXPECT_EQ(io::read_text(dir_ / "x.csv").substr(0, 8), "# t,gap\n");
  const io::Table r = io::read_csv(dir_ / "x.csv");
  EXPECT_EQ(r.names, t.names);
  EXPECT_EQ(r.column("t"), t.column("t"));
  EXPECT_TRUE(std::isnan(r.column("gap")[0]));
  EXPECT_EQ(r.column("gap")[1], 1e-300);
  EXPECT_EQ(r.column("gap")[2], -2.5);
}

TEST(Table, ColumnSelectionAndErrors) {
  io::Table t;
  t.add("t", {0, 1});
  t.add("r_numeric", {1, 0.9});
  t.add("r_exact", {1, 0.91});
  const io::Table sel = io::export_plot_data(t, {"r_exact", "t"});
  EXPECT_EQ(sel.names, (std::vector<std::string>{"r_exact", "t"}));
  try {
    io::export_plot_data(t, {"t", "radius"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingArtifact);
    EXPECT_NE(std::string(e.what()).find("r_numeric"), std::string::npos);
  }
  EXPECT_EQ(kind_of([&] { t.add("short", {1.0}); }), ErrorKind::InvalidArgument);
}

TEST(Reports, FrameTableColumns) {
  const SupportField s = test::field(2, -1, 1, 17, test::unit_sphere);
  const io::Table t = io::frame_table(s, {s.grid.nearest(v({0, 0}))});
  EXPECT_EQ(t.names, (std::vector<std::string>{"node", "y1", "y2", "D", "phi", "xi1", "xi2", "xi3", "C2", "apolarity"}));
  EXPECT_EQ(t.rows(), 1u);
  EXPECT_NEAR(t.column("xi3")[0], 1.0, 1e-2);
}

TEST_F(IoTest, TrajectoryManifest) {
  FlowConfig c;
  c.dt_policy = DtPolicy::fixed(1e-3);
  c.t_end = 5e-3;
  c.record_every = 2;
  const Trajectory tr = evolve(test::field(1, -1, 1, 17, test::unit_sphere), c);
  const auto m = io::write_trajectory(dir_ / "traj", tr, {{"name", "x"}});
  EXPECT_EQ(m["frames"].size(), tr.frames.size());
  EXPECT_EQ(m["steps"], tr.dts.size());
  EXPECT_EQ(io::read_json(dir_ / "traj" / "trajectory.json"), m);
  const SupportField last = io::read_field(dir_ / "traj" / m["frames"].back()["file"].get<std::string>());
  EXPECT_EQ(last.values, tr.final().values);
  EXPECT_EQ(io::read_csv(dir_ / "traj" / "dt_log.csv").column("dt"), tr.dts);
}

TEST(Reports, QuadricJsonAndVerdict) {
  std::vector<VecA> pts;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      const double x = -1 + 0.4 * i, y = -1 + 0.4 * j;
      VecA p(3);
      p << x, y, 0.5 * (x * x + y * y);
      pts.push_back(p);
    }
  const auto j = io::to_json(fit_quadric_classify(pts));
  EXPECT_EQ(j["classification"], "paraboloid");
  EXPECT_EQ(j["coefficients"].size(), 4u);
  EXPECT_EQ(j["signature"]["zero"], 1);
  const auto vd = io::verdict("cubic_decay", 0.1, 1.0, 0.4, true);
  EXPECT_EQ(vd["window"], nlohmann::json({0.1, 1.0}));
  EXPECT_EQ(vd["pass"], true);
}
