#include "demailly/snapshot.hpp"

#include <cstring>
#include <fstream>

#include "demailly/errors.hpp"

namespace demailly {

namespace {

constexpr char kMagic[4] = {'D', 'M', 'L', 'Y'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    char buf[sizeof(T)];
    in.read(buf, sizeof(T));
    if (!in) throw IoError("truncated snapshot");
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

std::vector<double> scalar_payload(const ScalarField& f) { return f.v; }

std::vector<double> matrix_payload(const HermitianMatrixField& h) {
    std::vector<double> out;
    out.reserve(2 * h.a.size());
    for (const cplx& z : h.a) {
        out.push_back(z.real());
        out.push_back(z.imag());
    }
    return out;
}

ScalarField scalar_from_payload(GridSpec g, const std::vector<double>& data) {
    if (static_cast<int>(data.size()) != g.size()) throw IoError("scalar payload size mismatch");
    ScalarField f(g);
    f.v = data;
    return f;
}

HermitianMatrixField matrix_from_payload(GridSpec g, int r, const std::vector<double>& data) {
    HermitianMatrixField h(g, r);
    if (data.size() != 2 * h.a.size()) throw IoError("matrix payload size mismatch");
    for (std::size_t i = 0; i < h.a.size(); ++i) h.a[i] = cplx(data[2 * i], data[2 * i + 1]);
    return h;
}

} // namespace

const SnapshotField* FieldSnapshot::find(const std::string& name) const {
    for (const SnapshotField& f : fields)
        if (f.name == name) return &f;
    return nullptr;
}

void write_snapshot(const std::string& path, const FieldSnapshot& snap) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(snap.n));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(snap.rank));
    put<double>(out, snap.t);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(snap.fields.size()));
    for (const SnapshotField& f : snap.fields) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(f.name.size()));
        out.write(f.name.data(), static_cast<std::streamsize>(f.name.size()));
        put<std::uint8_t>(out, f.kind);
        put<std::uint64_t>(out, f.data.size());
        out.write(reinterpret_cast<const char*>(f.data.data()),
                  static_cast<std::streamsize>(f.data.size() * sizeof(double)));
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

FieldSnapshot read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a DMLY snapshot");
    if (get<std::uint32_t>(in) != kVersion) throw IoError("unsupported snapshot version");
    FieldSnapshot snap;
    snap.n = static_cast<int>(get<std::uint32_t>(in));
    snap.rank = static_cast<int>(get<std::uint32_t>(in));
    snap.t = get<double>(in);
    std::uint32_t count = get<std::uint32_t>(in);
    snap.fields.resize(count);
    for (SnapshotField& f : snap.fields) {
        std::uint32_t len = get<std::uint32_t>(in);
        f.name.resize(len);
        in.read(f.name.data(), len);
        f.kind = get<std::uint8_t>(in);
        std::uint64_t n = get<std::uint64_t>(in);
        f.data.resize(n);
        in.read(reinterpret_cast<char*>(f.data.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) throw IoError("truncated snapshot payload");
    }
    return snap;
}

FieldSnapshot snapshot_from_checkpoint(const PathCheckpoint& cp, int rank) {
    FieldSnapshot snap;
    snap.n = cp.state.f.grid.n;
    snap.rank = rank;
    snap.t = cp.t;
    snap.fields.push_back({"f", 0, scalar_payload(cp.state.f)});
    snap.fields.push_back({"H", 1, matrix_payload(cp.state.H)});
    snap.fields.push_back({"dt", 0, {cp.dt}});
    if (cp.prev) {
        snap.fields.push_back({"t_prev", 0, {cp.prev->first}});
        snap.fields.push_back({"f_prev", 0, scalar_payload(cp.prev->second.f)});
        snap.fields.push_back({"H_prev", 1, matrix_payload(cp.prev->second.H)});
    }
    return snap;
}

PathCheckpoint checkpoint_from_snapshot(const FieldSnapshot& snap) {
    GridSpec g(snap.n);
    PathCheckpoint cp;
    cp.t = snap.t;
    const SnapshotField* f = snap.find("f");
    const SnapshotField* h = snap.find("H");
    const SnapshotField* dt = snap.find("dt");
    if (!f || !h || !dt || dt->data.size() != 1) throw IoError("snapshot is not a checkpoint");
    cp.state.f = scalar_from_payload(g, f->data);
    cp.state.H = matrix_from_payload(g, snap.rank, h->data);
    cp.dt = dt->data[0];
    const SnapshotField* tp = snap.find("t_prev");
    const SnapshotField* fp = snap.find("f_prev");
    const SnapshotField* hp = snap.find("H_prev");
    if (tp && fp && hp && tp->data.size() == 1) {
        MetricState prev;
        prev.f = scalar_from_payload(g, fp->data);
        prev.H = matrix_from_payload(g, snap.rank, hp->data);
        cp.prev = std::make_pair(tp->data[0], std::move(prev));
    }
    return cp;
}

} // namespace demailly
