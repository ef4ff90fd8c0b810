#pragma once

#include <stdexcept>
#include <string>

namespace fgd {

/** Base class for all errors thrown by this library. */
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/** Tensor shape or axis mismatch. The message names the offending axes. */
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

/** Invalid scalar argument (out of range, non-finite, degenerate geometry). */
class ValueError : public Error {
public:
    explicit ValueError(const std::string& msg) : Error(msg) {}
};

/** Dataset input problem: annotations, images, manifests. */
class DataError : public Error {
public:
    enum class Kind {
        MalformedXml,
        MissingField,
        DegenerateBox,
        OutOfBounds,
        BadImage,
        BadManifest,
        BadDetections,
        WriteFailed,
    };

    DataError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/** Weight file problem. Loads are all-or-nothing; no partial store escapes. */
class WeightsError : public Error {
public:
    enum class Kind {
        BadMagic,
        VersionMismatch,
        Truncated,
        MissingNode,
        UnknownNode,
        DuplicateNode,
        ShapeMismatch,
        Io,
    };

    WeightsError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/** Network config file problem (syntax or semantic). */
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/** Inputs that are individually valid but disagree with each other. */
class ConsistencyError : public Error {
public:
    explicit ConsistencyError(const std::string& msg) : Error(msg) {}
};

}  // namespace fgd
