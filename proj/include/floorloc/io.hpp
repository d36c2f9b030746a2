#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "floorloc/filter.hpp"
#include "floorloc/grid.hpp"
#include "floorloc/gravity.hpp"
#include "floorloc/likelihood.hpp"
#include "floorloc/observation.hpp"

namespace floorloc {

enum class GridFormat { JsonGrid, PgmAscii };

// ---------------------------------------------------------------------------
// json-grid: versioned JSON with one string per row, '.' free / '#' occupied,
// row 0 at the lowest y.
// ---------------------------------------------------------------------------

inline OccupancyGrid grid_from_json(const nlohmann::json& doc, const std::string& origin_hint) {
    if (!doc.is_object()) throw MalformedFile(origin_hint + ": not a JSON object");
    if (doc.value("format_version", 0) != 1)
        throw MalformedFile(origin_hint + ": unsupported or missing format_version");
    if (!doc.contains("resolution") || !doc["resolution"].is_number())
        throw MalformedFile(origin_hint + ": missing numeric 'resolution'");
    if (!doc.contains("rows") || !doc["rows"].is_array())
        throw MalformedFile(origin_hint + ": missing 'rows' array");

    const double res = doc["resolution"].get<double>();
    if (!(res > 0.0)) throw MalformedFile(origin_hint + ": resolution must be positive");
    double x0 = 0.0, y0 = 0.0;
    if (doc.contains("origin")) {
        const auto& o = doc["origin"];
        if (!o.is_array() || o.size() != 2) throw MalformedFile(origin_hint + ": origin must be [x, y]");
        x0 = o[0].get<double>();
        y0 = o[1].get<double>();
    }

    const auto& rows = doc["rows"];
    const int height = static_cast<int>(rows.size());
    if (height == 0) throw ZeroArea(origin_hint + ": no rows");
    const std::string first = rows[0].get<std::string>();
    const int width = static_cast<int>(first.size());
    if (width == 0) throw ZeroArea(origin_hint + ": empty row");

    OccupancyGrid grid(width, height, res, x0, y0);
    for (int j = 0; j < height; ++j) {
        if (!rows[j].is_string()) throw MalformedFile(origin_hint + ": row " + std::to_string(j) + " is not a string");
        const std::string row = rows[j].get<std::string>();
        if (static_cast<int>(row.size()) != width)
            throw InconsistentDims(origin_hint + ": row " + std::to_string(j) + " has " +
                                   std::to_string(row.size()) + " cells, expected " + std::to_string(width));
        for (int i = 0; i < width; ++i) {
            if (row[i] == '.')
                grid.at(i, j) = Cell::Free;
            else if (row[i] == '#')
                grid.at(i, j) = Cell::Occupied;
            else
                throw MalformedFile(origin_hint + ": unknown cell character '" + std::string(1, row[i]) + "'");
        }
    }
    return grid;
}

inline nlohmann::ordered_json grid_to_json(const OccupancyGrid& grid) {
    nlohmann::ordered_json doc;
    doc["format_version"] = 1;
    doc["resolution"] = grid.resolution;
    doc["origin"] = {grid.origin_x, grid.origin_y};
    std::vector<std::string> rows(grid.height);
    for (int j = 0; j < grid.height; ++j) {
        std::string row(grid.width, '.');
        for (int i = 0; i < grid.width; ++i)
            if (grid.occupied(i, j)) row[i] = '#';
        rows[j] = std::move(row);
    }
    doc["rows"] = rows;
    return doc;
}

// ---------------------------------------------------------------------------
// pgm-ascii (P2): pixel < 128 is occupied. File rows run top to bottom, so
// file row 0 maps to the highest-y grid row. Resolution and origin come from a
// sidecar "<path>.meta.json" or from caller-supplied values.
// ---------------------------------------------------------------------------

inline OccupancyGrid grid_from_pgm_stream(std::istream& in, const std::string& origin_hint,
                                          double resolution, double x0, double y0) {
    std::string token;
    auto next_token = [&]() -> std::string {
        while (in >> token) {
            if (token[0] == '#') {  // comment to end of line
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return token;
        }
        throw MalformedFile(origin_hint + ": unexpected end of file");
    };

    if (next_token() != "P2") throw MalformedFile(origin_hint + ": expected P2 magic");
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(next_token());
        height = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw MalformedFile(origin_hint + ": bad header integer");
    }
    if (width <= 0 || height <= 0) throw ZeroArea(origin_hint + ": " + std::to_string(width) + "x" + std::to_string(height));
    if (maxval <= 0) throw MalformedFile(origin_hint + ": maxval must be positive");

    OccupancyGrid grid(width, height, resolution, x0, y0);
    for (int r = 0; r < height; ++r) {
        const int j = height - 1 - r;  // image row 0 = top = highest y
        for (int i = 0; i < width; ++i) {
            int v = 0;
            try {
                v = std::stoi(next_token());
            } catch (const MalformedFile&) {
                throw InconsistentDims(origin_hint + ": fewer pixels than header promises");
            } catch (const std::exception&) {
                throw MalformedFile(origin_hint + ": bad pixel value");
            }
            grid.at(i, j) = v < 128 ? Cell::Occupied : Cell::Free;
        }
    }
    return grid;
}

inline void write_pgm(std::ostream& out, int width, int height,
                      const std::vector<int>& top_down_pixels) {
    out << "P2\n" << width << " " << height << "\n255\n";
    for (int r = 0; r < height; ++r) {
        for (int i = 0; i < width; ++i) {
            out << top_down_pixels[static_cast<std::size_t>(r) * width + i];
            out << (i + 1 == width ? '\n' : ' ');
        }
    }
}

inline void save_grid_pgm(const OccupancyGrid& grid, std::ostream& out) {
    std::vector<int> px(static_cast<std::size_t>(grid.width) * grid.height);
    for (int r = 0; r < grid.height; ++r) {
        const int j = grid.height - 1 - r;
        for (int i = 0; i < grid.width; ++i)
            px[static_cast<std::size_t>(r) * grid.width + i] = grid.occupied(i, j) ? 0 : 255;
    }
    write_pgm(out, grid.width, grid.height, px);
}

// ---------------------------------------------------------------------------
// file-level helpers
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedFile(path + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MalformedFile(path + ": cannot open for writing");
    out << content;
}

/// Load a grid from disk. For pgm-ascii, resolution/origin fall back to the
/// sidecar "<path>.meta.json" when not supplied by the caller.
inline OccupancyGrid load_grid(const std::string& path, GridFormat format,
                               std::optional<double> resolution = std::nullopt,
                               std::optional<std::pair<double, double>> origin = std::nullopt) {
    if (format == GridFormat::JsonGrid) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(read_file(path));
        } catch (const nlohmann::json::parse_error& e) {
            throw MalformedFile(path + ": " + e.what());
        }
        return grid_from_json(doc, path);
    }

    double res = resolution.value_or(0.0);
    double x0 = origin ? origin->first : 0.0;
    double y0 = origin ? origin->second : 0.0;
    if (!resolution || !origin) {
        const std::string meta_path = path + ".meta.json";
        std::ifstream meta(meta_path);
        if (meta) {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(meta);
            } catch (const nlohmann::json::parse_error& e) {
                throw MalformedFile(meta_path + ": " + e.what());
            }
            if (!resolution && doc.contains("resolution")) res = doc["resolution"].get<double>();
            if (!origin && doc.contains("origin")) {
                x0 = doc["origin"][0].get<double>();
                y0 = doc["origin"][1].get<double>();
            }
        }
    }
    if (!(res > 0.0))
        throw MalformedFile(path + ": pgm needs a resolution (flag or sidecar .meta.json)");
    std::ifstream in(path);
    if (!in) throw MalformedFile(path + ": cannot open");
    return grid_from_pgm_stream(in, path, res, x0, y0);
}

inline GridFormat guess_grid_format(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".pgm") return GridFormat::PgmAscii;
    return GridFormat::JsonGrid;
}

inline void save_grid(const OccupancyGrid& grid, const std::string& path) {
    if (guess_grid_format(path) == GridFormat::PgmAscii) {
        std::ofstream out(path);
        if (!out) throw MalformedFile(path + ": cannot open for writing");
        save_grid_pgm(grid, out);
        nlohmann::ordered_json meta;
        meta["resolution"] = grid.resolution;
        meta["origin"] = {grid.origin_x, grid.origin_y};
        write_file(path + ".meta.json", meta.dump(2) + "\n");
    } else {
        write_file(path, grid_to_json(grid).dump() + "\n");
    }
}

// ---------------------------------------------------------------------------
// observations: JSON lines, one frame per line
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json observation_to_json(int frame, const DepthObservation& obs) {
    nlohmann::ordered_json rec;
    rec["frame"] = frame;
    rec["angles"] = obs.ray_angles;
    rec["depths"] = obs.depths;
    rec["scales"] = obs.scales;
    std::vector<bool> valid(obs.valid.begin(), obs.valid.end());
    rec["valid"] = valid;
    return rec;
}

inline DepthObservation observation_from_json(const nlohmann::json& rec, const std::string& origin_hint) {
    DepthObservation obs;
    try {
        obs.ray_angles = rec.at("angles").get<std::vector<double>>();
        obs.depths = rec.at("depths").get<std::vector<double>>();
        obs.scales = rec.at("scales").get<std::vector<double>>();
        const auto valid = rec.at("valid").get<std::vector<bool>>();
        obs.valid.assign(valid.begin(), valid.end());
    } catch (const nlohmann::json::exception& e) {
        throw MalformedFile(origin_hint + ": " + e.what());
    }
    const std::size_t n = obs.ray_angles.size();
    if (obs.depths.size() != n || obs.scales.size() != n || obs.valid.size() != n)
        throw InconsistentDims(origin_hint + ": observation arrays disagree on ray count");
    for (double& s : obs.scales) s = std::max(s, kMinScale);
    return obs;
}

/// Reads a JSONL observation file into a frame-indexed list; missing frames
/// stay empty. `frames` bounds the result length (use the motion count).
inline std::vector<std::optional<DepthObservation>> load_observations(const std::string& path,
                                                                      std::size_t frames) {
    std::vector<std::optional<DepthObservation>> out(frames);
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw MalformedFile(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        const auto frame = rec.value("frame", -1);
        if (frame < 0 || static_cast<std::size_t>(frame) >= frames) continue;
        out[frame] = observation_from_json(rec, path + ":" + std::to_string(line_no));
    }
    return out;
}

// ---------------------------------------------------------------------------
// debug exports
// ---------------------------------------------------------------------------

inline void save_mask_pgm(const GravityAlignment& alignment, const std::string& path) {
    std::vector<int> px(alignment.mask.size());
    for (std::size_t n = 0; n < alignment.mask.size(); ++n) px[n] = alignment.mask[n] ? 255 : 0;
    std::ofstream out(path);
    if (!out) throw MalformedFile(path + ": cannot open for writing");
    write_pgm(out, alignment.width, alignment.height, px);
}

/// Max-over-orientation (x, y) heatmap of a likelihood volume, normalized to
/// 0..255 over the finite range.
inline void save_likelihood_heatmap_pgm(const LikelihoodVolume& vol, const std::string& path) {
    const std::size_t plane = static_cast<std::size_t>(vol.nx) * vol.ny;
    std::vector<double> max_marginal(plane, -std::numeric_limits<double>::infinity());
    for (int k = 0; k < vol.n_theta; ++k)
        for (std::size_t n = 0; n < plane; ++n)
            max_marginal[n] = std::max(max_marginal[n], vol.log_values[k * plane + n]);

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : max_marginal)
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const double span = hi > lo ? hi - lo : 1.0;

    std::vector<int> px(plane, 0);
    for (int r = 0; r < vol.ny; ++r) {
        const int j = vol.ny - 1 - r;
        for (int i = 0; i < vol.nx; ++i) {
            const double v = max_marginal[static_cast<std::size_t>(j) * vol.nx + i];
            px[static_cast<std::size_t>(r) * vol.nx + i] =
                std::isfinite(v) ? static_cast<int>(std::lround(255.0 * (v - lo) / span)) : 0;
        }
    }
    std::ofstream out(path);
    if (!out) throw MalformedFile(path + ": cannot open for writing");
    write_pgm(out, vol.nx, vol.ny, px);
}

/// Max-over-orientation (x, y) heatmap of a belief volume.
inline void save_belief_heatmap_pgm(const BeliefVolume& belief, const std::string& path) {
    const std::size_t plane = belief.slice_size();
    std::vector<double> max_marginal(plane, 0.0);
    for (int k = 0; k < belief.n_theta; ++k)
        for (std::size_t n = 0; n < plane; ++n)
            max_marginal[n] = std::max(max_marginal[n], belief.values[k * plane + n]);
    double hi = 0.0;
    for (double v : max_marginal) hi = std::max(hi, v);
    if (hi <= 0.0) hi = 1.0;

    std::vector<int> px(plane, 0);
    for (int r = 0; r < belief.ny; ++r) {
        const int j = belief.ny - 1 - r;
        for (int i = 0; i < belief.nx; ++i) {
            const double v = max_marginal[static_cast<std::size_t>(j) * belief.nx + i];
            px[static_cast<std::size_t>(r) * belief.nx + i] = static_cast<int>(std::lround(255.0 * v / hi));
        }
    }
    std::ofstream out(path);
    if (!out) throw MalformedFile(path + ": cannot open for writing");
    write_pgm(out, belief.nx, belief.ny, px);
}

}  // namespace floorloc
