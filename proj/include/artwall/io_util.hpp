#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace artwall {

using json = nlohmann::json;

inline std::vector<char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    in.seekg(0, std::ios::end);
    std::vector<char> bytes(static_cast<size_t>(in.tellg()));
    in.seekg(0);
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw std::runtime_error("short read: " + path.string());
    return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, const void* data, size_t n) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open file for write: " + path.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw std::runtime_error("short write: " + path.string());
}

inline json read_json_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return json::parse(bytes.begin(), bytes.end());
}

inline void write_json_file(const std::filesystem::path& path, const json& j, int indent = 2) {
    const std::string text = j.dump(indent);
    write_file_bytes(path, text.data(), text.size());
}

inline std::uint64_t fnv1a64(const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hash_hex(const std::string& text) {
    const std::uint64_t h = fnv1a64(text.data(), text.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

// Canonical hash of a JSON value. nlohmann::json keeps object keys sorted,
// so dump() is already order-stable.
inline std::string json_hash(const json& j) { return hash_hex(j.dump()); }

// Little-endian stream helpers for the binary container formats. The
// formats are defined little-endian; these are memcpy on the platforms we
// build for.
class ByteWriter {
public:
    void raw(const void* data, size_t n) {
        const auto* p = static_cast<const char*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }
    template <typename T>
    void pod(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        raw(&v, sizeof(T));
    }
    template <typename T>
    void pod_array(const T* v, size_t count) {
        static_assert(std::is_trivially_copyable_v<T>);
        raw(v, sizeof(T) * count);
    }
    const std::vector<char>& bytes() const { return buf_; }

private:
    std::vector<char> buf_;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<char>& bytes) : bytes_(bytes) {}
    void raw(void* out, size_t n) {
        if (pos_ + n > bytes_.size()) throw std::runtime_error("truncated binary payload");
        std::memcpy(out, bytes_.data() + pos_, n);
        pos_ += n;
    }
    template <typename T>
    T pod() {
        T v;
        raw(&v, sizeof(T));
        return v;
    }
    template <typename T>
    void pod_array(T* out, size_t count) {
        raw(out, sizeof(T) * count);
    }
    size_t remaining() const { return bytes_.size() - pos_; }

private:
    const std::vector<char>& bytes_;
    size_t pos_ = 0;
};

// Container layout shared by mesh/solution/checkpoint files:
//   8-byte magic | u64 header length | header JSON (UTF-8) | payload bytes
inline void write_container(const std::filesystem::path& path, const char magic[8],
                            const json& header, const std::vector<char>& payload) {
    ByteWriter w;
    w.raw(magic, 8);
    const std::string head = header.dump();
    w.pod<std::uint64_t>(head.size());
    w.raw(head.data(), head.size());
    w.raw(payload.data(), payload.size());
    write_file_bytes(path, w.bytes().data(), w.bytes().size());
}

struct Container {
    json header;
    std::vector<char> payload;
};

inline Container read_container(const std::filesystem::path& path, const char magic[8]) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), magic, 8) != 0)
        throw std::runtime_error("bad magic in " + path.string());
    std::uint64_t head_len;
    std::memcpy(&head_len, bytes.data() + 8, 8);
    if (16 + head_len > bytes.size()) throw std::runtime_error("truncated header in " + path.string());
    Container c;
    c.header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(head_len));
    c.payload.assign(bytes.begin() + 16 + static_cast<long>(head_len), bytes.end());
    return c;
}

} // namespace artwall
