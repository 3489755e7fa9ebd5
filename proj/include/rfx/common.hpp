#pragma once

#include <stdexcept>
#include <string>

namespace rfx {

inline constexpr const char* kVersion = "0.1.0";

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent lattice/block dimensions (r_i out of [1, n_i], bad extents).
class shape_error : public error {
public:
    using error::error;
};

/// Index outside the valid block/lattice index set.
class index_error : public error {
public:
    using error::error;
};

/// Lag exceeds the range admitted by the block geometry.
class lag_error : public error {
public:
    using error::error;
};

/// Degenerate input: zero scale, no exceedance, vanishing variance.
class degenerate_error : public error {
public:
    using error::error;
};

/// Too few samples or replicates for the requested statistic.
class sample_error : public error {
public:
    using error::error;
};

/// Parameter outside its admissible range.
class param_error : public error {
public:
    using error::error;
};

/// Invalid configuration document; message names the offending key.
class config_error : public error {
public:
    using error::error;
};

} // namespace rfx
