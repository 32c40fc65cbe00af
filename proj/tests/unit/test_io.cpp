#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "gark/errors.hpp"
#include "gark/io.hpp"
#include "test_support.hpp"

using namespace gark;

namespace {

std::string temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("gark_io_" + name);
    std::filesystem::remove_all(p);
    io::ensure_directory(p.string());
    return p.string();
}

}  // namespace

TEST(Io, FormatSci) {
    EXPECT_EQ(io::format_sci(-6.59341e-3, 5), "-6.5934e-03");
    EXPECT_EQ(io::format_sci(0.0, 5), "0.0000e+00");
}

TEST(Io, DumpJsonUsesSeventeenDigits) {
    const std::string s = io::dump_json(nlohmann::json{{"x", 0.1}});
    EXPECT_NE(s.find("1.0000000000000001e-01"), std::string::npos) << s;
    EXPECT_EQ(nlohmann::json::parse(s).at("x").get<double>(), 0.1);
}

TEST(Io, DumpJsonIsDeterministic) {
    const nlohmann::json j{{"b", {1.5, 2}}, {"a", "text"}, {"c", nullptr}};
    EXPECT_EQ(io::dump_json(j), io::dump_json(nlohmann::json::parse(io::dump_json(j))));
}

TEST(Io, Fnv1aKnownValues) {
    EXPECT_EQ(io::fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(io::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(io::content_hash(nlohmann::json{{"k", 1}}).size(), 16u);
    EXPECT_NE(io::content_hash(nlohmann::json{{"k", 1}}), io::content_hash(nlohmann::json{{"k", 2}}));
}

TEST(Io, VectorRoundTrip) {
    const std::string dir = temp_dir("vec");
    const Vector v = Vector::LinSpaced(7, -1.0 / 3.0, 5.0);
    io::save_vector(dir + "/v.bin", v);
    const auto back = io::load_vector(dir + "/v.bin");
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, v);
    EXPECT_FALSE(io::load_vector(dir + "/missing.bin").has_value());
}

TEST(Io, TruncatedVectorIsRejected) {
    const std::string dir = temp_dir("trunc");
    io::save_vector(dir + "/v.bin", Vector::Ones(10));
    std::filesystem::resize_file(dir + "/v.bin", 20);
    EXPECT_FALSE(io::load_vector(dir + "/v.bin").has_value());
}

TEST(Io, TrajectoryRoundTrip) {
    const std::string dir = temp_dir("traj");
    const auto s = gark::test::scalar_system(-1.0, -2.0);
    const ForwardTrajectory tr = integrate(*s, build_imex22(), TimeGrid::uniform(0.0, 1.0, 5), gark::test::scalar(1.0));
    io::save_trajectory(dir + "/t.bin", tr, true);
    const ForwardTrajectory back = io::load_trajectory(dir + "/t.bin");
    EXPECT_EQ(back.grid.nodes(), tr.grid.nodes());
    ASSERT_EQ(back.states.size(), tr.states.size());
    for (std::size_t n = 0; n < tr.states.size(); ++n) EXPECT_EQ(back.states[n], tr.states[n]);
}

TEST(Io, AppendLine) {
    const std::string dir = temp_dir("append");
    io::write_text(dir + "/f.txt", "a\n");
    io::append_line(dir + "/f.txt", "b");
    std::ifstream in(dir + "/f.txt");
    const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(content, "a\nb\n");
}
