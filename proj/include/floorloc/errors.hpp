#pragma once

#include <stdexcept>
#include <string>

namespace floorloc {

// Error hierarchy. Every condition the library can reject is a named type so
// callers can catch precisely; all derive from Error (a runtime_error).
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- map loading ---
struct MalformedFile : Error {
    explicit MalformedFile(const std::string& msg) : Error("malformed file: " + msg) {}
};
struct InconsistentDims : Error {
    explicit InconsistentDims(const std::string& msg) : Error("inconsistent dimensions: " + msg) {}
};
struct ZeroArea : Error {
    explicit ZeroArea(const std::string& msg) : Error("zero-area grid: " + msg) {}
};

// --- ray casting ---
struct OriginOccupied : Error {
    explicit OriginOccupied(const std::string& msg) : Error("ray origin in occupied cell: " + msg) {}
};
struct OriginOutside : Error {
    explicit OriginOutside(const std::string& msg) : Error("ray origin outside grid: " + msg) {}
};

// --- gravity alignment ---
struct DegenerateTilt : Error {
    explicit DegenerateTilt(const std::string& msg) : Error("degenerate tilt: " + msg) {}
};

// --- observation / likelihood ---
struct LengthMismatch : Error {
    explicit LengthMismatch(const std::string& msg) : Error("length mismatch: " + msg) {}
};
struct EmptyFreeSpace : Error {
    explicit EmptyFreeSpace(const std::string& msg) : Error("grid has no free cells: " + msg) {}
};

// --- filter ---
struct AllZeroPosterior : Error {
    explicit AllZeroPosterior(const std::string& msg)
        : Error("posterior vanished everywhere: " + msg) {}
};

// --- synthesis ---
struct StuckTrajectory : Error {
    explicit StuckTrajectory(const std::string& msg) : Error("trajectory stuck: " + msg) {}
};

// --- evaluation ---
struct TooShort : Error {
    explicit TooShort(const std::string& msg) : Error("sequence too short: " + msg) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& key, const std::string& msg)
        : Error("config error at '" + key + "': " + msg), key_name(key) {}
    std::string key_name;
};

}  // namespace floorloc
