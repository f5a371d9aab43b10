#include <bit>
#include <cstring>
#include <fstream>

#include "slip/fields.hpp"

namespace slip {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

namespace {

void put_u32(std::ofstream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::ifstream& is, const std::string& path) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4)) throw Error("snapshot: truncated header in " + path);
    return v;
}

}  // namespace

void write_snapshot(const std::string& path, const std::string& name, const Field& f) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("snapshot: cannot open " + path + " for writing");
    os.write("SLPF", 4);
    put_u32(os, kSnapshotVersion);
    put_u32(os, static_cast<std::uint32_t>(f.n1()));
    put_u32(os, static_cast<std::uint32_t>(f.n2()));
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    os.write(reinterpret_cast<const char*>(f.v.data()), static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!os) throw Error("snapshot: write failed for " + path);
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("snapshot: cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "SLPF", 4) != 0) throw Error("snapshot: bad magic in " + path);
    Snapshot s;
    std::uint32_t version = get_u32(is, path);
    if (version != kSnapshotVersion) throw Error("snapshot: unsupported version in " + path);
    s.n1 = get_u32(is, path);
    s.n2 = get_u32(is, path);
    std::uint32_t len = get_u32(is, path);
    if (len > 4096) throw Error("snapshot: implausible name length in " + path);
    s.name.resize(len);
    if (len && !is.read(s.name.data(), len)) throw Error("snapshot: truncated name in " + path);
    s.values.resize(static_cast<std::size_t>(s.n1) * (s.n2 + 1));
    if (!is.read(reinterpret_cast<char*>(s.values.data()), static_cast<std::streamsize>(s.values.size() * sizeof(double))))
        throw Error("snapshot: truncated data in " + path);
    return s;
}

Field read_snapshot_field(const std::string& path, DomainPtr d, std::string* name) {
    Snapshot s = read_snapshot(path);
    if (s.n1 != d->grid.n1() || s.n2 != d->grid.n2())
        throw Error("snapshot: grid mismatch in " + path + " (file " + std::to_string(s.n1) + "x" +
                    std::to_string(s.n2) + ", expected " + std::to_string(d->grid.n1()) + "x" +
                    std::to_string(d->grid.n2()) + ")");
    Field f(d);
    std::copy(s.values.begin(), s.values.end(), f.v.begin());
    if (name) *name = s.name;
    return f;
}

}  // namespace slip
