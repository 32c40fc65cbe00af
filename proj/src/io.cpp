#include "gark/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gark/errors.hpp"

namespace gark::io {

std::string format_sci(double v, int significant) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", std::max(0, significant - 1), v);
    return buf;
}

namespace {

void write_string(std::ostringstream& os, const std::string& s) {
    os << nlohmann::json(s).dump();
}

void write(std::ostringstream& os, const nlohmann::json& j, int indent, int depth) {
    using nlohmann::json;
    const auto newline = [&](int d) {
        if (indent < 0) return;
        os << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
    };
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ',';
                first = false;
                newline(depth + 1);
                write_string(os, it.key());
                os << (indent < 0 ? ":" : ": ");
                write(os, it.value(), indent, depth + 1);
            }
            newline(depth);
            os << '}';
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            // numeric arrays stay on one line
            const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
            os << '[';
            bool first = true;
            for (const auto& e : j) {
                if (!first) os << (flat && indent >= 0 ? ", " : ",");
                first = false;
                if (!flat) newline(depth + 1);
                write(os, e, flat ? -1 : indent, depth + 1);
            }
            if (!flat) newline(depth);
            os << ']';
            return;
        }
        case json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                os << "null";
            } else {
                os << format_sci(v, 17);
            }
            return;
        }
        default:
            os << j.dump();
    }
}

}  // namespace

std::string dump_json(const nlohmann::json& j, int indent) {
    std::ostringstream os;
    write(os, j, indent, 0);
    return os.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path + " for writing");
    f << text;
    if (!f) throw Error("write to " + path + " failed");
}

void append_line(const std::string& path, const std::string& line) {
    std::ofstream f(path, std::ios::binary | std::ios::app);
    if (!f) throw Error("cannot open " + path + " for appending");
    f << line << '\n';
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec || !std::filesystem::is_directory(path)) throw Error("cannot create directory " + path);
}

namespace {

void put_u64(std::ofstream& f, std::uint64_t v) { f.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_vec(std::ofstream& f, const Vector& v) {
    put_u64(f, static_cast<std::uint64_t>(v.size()));
    f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * v.size()));
}
bool get_u64(std::ifstream& f, std::uint64_t& v) {
    return static_cast<bool>(f.read(reinterpret_cast<char*>(&v), sizeof v));
}
bool get_vec(std::ifstream& f, Vector& v) {
    std::uint64_t n = 0;
    if (!get_u64(f, n) || n > (1ull << 32)) return false;
    v.resize(static_cast<Eigen::Index>(n));
    return static_cast<bool>(f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * n)));
}

constexpr std::uint64_t kTrajectoryMagic = 0x4741524b54524a31ull;  // "GARKTRJ1"

}  // namespace

void save_vector(const std::string& path, const Vector& v) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path + " for writing");
    put_vec(f, v);
}

std::optional<Vector> load_vector(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return std::nullopt;
    Vector v;
    if (!get_vec(f, v)) return std::nullopt;
    return v;
}

void save_trajectory(const std::string& path, const ForwardTrajectory& traj, bool with_stages) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path + " for writing");
    put_u64(f, kTrajectoryMagic);
    const auto& t = traj.grid.nodes();
    put_vec(f, Eigen::Map<const Vector>(t.data(), static_cast<Eigen::Index>(t.size())));
    put_u64(f, static_cast<std::uint64_t>(traj.storage));
    put_u64(f, traj.states.size());
    for (const auto& y : traj.states) put_vec(f, y);
    const bool stages = with_stages && !traj.stages.empty();
    put_u64(f, stages ? traj.stages.size() : 0);
    if (stages) {
        for (const auto& rec : traj.stages) {
            put_u64(f, rec.values.size());
            for (std::size_t q = 0; q < rec.values.size(); ++q) {
                put_u64(f, rec.values[q].size());
                for (std::size_t i = 0; i < rec.values[q].size(); ++i) {
                    put_vec(f, rec.values[q][i]);
                    put_vec(f, rec.slopes[q][i]);
                }
            }
        }
    }
}

ForwardTrajectory load_trajectory(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    std::uint64_t magic = 0, storage = 0, count = 0;
    Vector t;
    if (!get_u64(f, magic) || magic != kTrajectoryMagic || !get_vec(f, t) || !get_u64(f, storage) ||
        !get_u64(f, count)) {
        throw Error(path + " is not a trajectory snapshot");
    }
    ForwardTrajectory traj{TimeGrid(std::vector<double>(t.data(), t.data() + t.size())),
                           static_cast<StorageMode>(storage) == StorageMode::kFull
                               ? StorageMode::kStates
                               : static_cast<StorageMode>(storage),
                           {},
                           {}};
    for (std::uint64_t k = 0; k < count; ++k) {
        Vector y;
        if (!get_vec(f, y)) throw Error(path + " is truncated");
        traj.states.push_back(std::move(y));
    }
    return traj;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string content_hash(const nlohmann::json& j) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(dump_json(j))));
    return buf;
}

}  // namespace gark::io
