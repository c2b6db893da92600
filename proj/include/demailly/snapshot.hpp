#ifndef DEMAILLY_SNAPSHOT_HPP
#define DEMAILLY_SNAPSHOT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "demailly/continuation.hpp"

namespace demailly {

// Binary field snapshots, magic "DMLY", format version 1. Header: magic,
// u32 version, u32 n, u32 r, f64 t, u32 field count. Each field: u32 name
// length + bytes, u8 kind (0 scalar, 1 complex matrix), u64 payload count,
// payload of float64 little-endian (complex entries interleaved re, im).

struct SnapshotField {
    std::string name;
    std::uint8_t kind = 0;
    std::vector<double> data;

    bool operator==(const SnapshotField&) const = default;
};

struct FieldSnapshot {
    int n = 0;
    int rank = 0;
    double t = 0.0;
    std::vector<SnapshotField> fields;

    bool operator==(const FieldSnapshot&) const = default;
    const SnapshotField* find(const std::string& name) const;
};

void write_snapshot(const std::string& path, const FieldSnapshot& snap);
FieldSnapshot read_snapshot(const std::string& path);

/// Checkpoints round-trip through snapshots; the predictor history and step
/// size ride along as extra fields so a resumed run is bit-identical.
FieldSnapshot snapshot_from_checkpoint(const PathCheckpoint& cp, int rank);
PathCheckpoint checkpoint_from_snapshot(const FieldSnapshot& snap);

} // namespace demailly

#endif
