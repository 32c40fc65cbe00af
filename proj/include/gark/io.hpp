#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gark/integrator.hpp"
#include "gark/linalg.hpp"
#include "json.hpp"

namespace gark::io {

/// Scientific notation with `significant` digits, e.g. 5 -> "-6.5934e-03".
std::string format_sci(double v, int significant);

/// JSON text with every floating-point number written with 17 significant
/// digits. `indent` < 0 gives a single line.
std::string dump_json(const nlohmann::json& j, int indent = -1);

void write_text(const std::string& path, const std::string& text);
void append_line(const std::string& path, const std::string& line);
void ensure_directory(const std::string& path);

/// Raw little-endian doubles with a length prefix.
void save_vector(const std::string& path, const Vector& v);
std::optional<Vector> load_vector(const std::string& path);

/// Binary snapshot: step times, y_n, and optionally stage values and slopes.
void save_trajectory(const std::string& path, const ForwardTrajectory& traj, bool with_stages = false);
/// Loads times and states (stages are skipped).
ForwardTrajectory load_trajectory(const std::string& path);

std::uint64_t fnv1a(const std::string& bytes);
/// 16 hex digits of the FNV-1a hash of the canonical JSON text.
std::string content_hash(const nlohmann::json& j);

}  // namespace gark::io
