#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "rmrp/field.hpp"
#include "rmrp/linear_model.hpp"

namespace rmrp {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// A field plus the optional AdamW state needed to resume online updates.
struct Checkpoint {
  ParametricField field;
  std::optional<AdamWState> optimizer;
};

/// Little-endian binary layout, independent of host byte order:
///
///   "RMRP" u32 version
///   u8 kind, u8 task, u8 activation, u8 projection_kind
///   u32 input_dim, u32 M, u32 k
///   f64 density, u64 feature_seed, u64 projection_seed, f64 scale, f64 magnitude
///   f64 W[M * input_dim] (row-major), f64 b[M]
///   u64 nnz, nnz * (u32 row, u32 col, i8 sign)
///   f64 head[k]
///   u8 has_optimizer
///   [f64 lr, f64 weight_decay, f64 rate1, f64 rate2, f64 eps, i64 step,
///    f64 m[k], f64 v[k]]
///
/// Doubles are stored as their IEEE-754 bit patterns, so a round trip is
/// bit-exact. The byte size depends only on (input_dim, M, k, nnz).
void write_checkpoint(std::ostream& out, const ParametricField& field,
                      const AdamWState* optimizer = nullptr);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const ParametricField& field,
                     const AdamWState* optimizer = nullptr);
Checkpoint load_checkpoint(const std::string& path);

std::size_t checkpoint_bytes(const ParametricField& field, const AdamWState* optimizer = nullptr);

}  // namespace rmrp
