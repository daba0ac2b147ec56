#pragma once

#include <stdexcept>
#include <string>

namespace limbgo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fewer than three markers, or a collinear reference cluster.
class DegenerateCluster : public Error {
public:
    using Error::Error;
};

class MismatchedLength : public Error {
public:
    using Error::Error;
};

/// Fewer than four points, or points that do not constrain a sphere centre.
class DegenerateSphere : public Error {
public:
    using Error::Error;
};

/// Two vectors defining an anatomical axis are (nearly) parallel or vanish.
class DegenerateFrame : public Error {
public:
    using Error::Error;
};

/// Synthetic-subject parameters that cannot produce a usable marker layout.
class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

class EmptySeries : public Error {
public:
    using Error::Error;
};

class InfeasibleStart : public Error {
public:
    using Error::Error;
};

/// A required marker is absent from a frame.
class MissingMarker : public Error {
public:
    MissingMarker(const std::string& marker, const std::string& context)
        : Error("missing marker '" + marker + "'" + (context.empty() ? "" : " in " + context)),
          marker_(marker) {}

    const std::string& marker() const noexcept { return marker_; }

private:
    std::string marker_;
};

/// Malformed input file; carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Filesystem failure, message includes the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

/// Configuration rejected before any computation starts.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace limbgo
