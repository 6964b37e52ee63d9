#include "inv2inv/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace inv2inv {

namespace {

constexpr char kMagic[4] = {'I', 'V', 'I', 'T'};
constexpr unsigned char kVersion = 0x01;
constexpr std::uint32_t kMaxRank = 8;

void put_u32le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

std::uint32_t get_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32le(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32le(out, bits);
}

float get_f32le(const unsigned char* p) {
    std::uint32_t bits = get_u32le(p);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

void spit(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
    std::string out;
    out.reserve(9 + 4 * t.rank() + 4 * t.size());
    out.append(kMagic, 4);
    out.push_back(static_cast<char>(kVersion));
    put_u32le(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32le(out, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < t.size(); ++i) put_f32le(out, static_cast<float>(t[i]));
    spit(path, out);
}

Tensor read_tensor(const std::filesystem::path& path) {
    std::vector<unsigned char> bytes = slurp(path);
    if (bytes.size() < 9 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ParseError("bad tensor magic in " + path.string());
    if (bytes[4] != kVersion)
        throw ParseError("unsupported tensor format version in " + path.string());
    std::uint32_t rank = get_u32le(bytes.data() + 5);
    if (rank == 0) throw ParseError("tensor rank 0 not allowed in " + path.string());
    if (rank > kMaxRank) throw ParseError("tensor rank too large in " + path.string());
    std::size_t pos = 9;
    if (bytes.size() < pos + 4ull * rank)
        throw ParseError("truncated tensor header in " + path.string());
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        shape[i] = get_u32le(bytes.data() + pos);
        pos += 4;
        if (shape[i] == 0) throw ParseError("zero tensor dimension in " + path.string());
        count *= shape[i];
    }
    std::size_t expect = pos + 4 * count;
    if (bytes.size() != expect)
        throw ParseError("truncated tensor payload in " + path.string() + ": expected " +
                         std::to_string(expect) + " bytes, got " + std::to_string(bytes.size()));
    Tensor t(shape);
    for (std::size_t i = 0; i < count; ++i) t[i] = get_f32le(bytes.data() + pos + 4 * i);
    return t;
}

void write_image(const std::filesystem::path& path, const Tensor& img) {
    std::size_t c = img.channels(), h = img.height(), w = img.width();
    if (c != 1 && c != 3) throw ShapeError("image files take 1- or 3-channel tensors");
    std::string out = (c == 1 ? "P5\n" : "P6\n");
    out += std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t k = 0; k < c; ++k) {
                double v = img.at(k, y, x);
                v = v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v);
                long b = std::lround((v + 1.0) * 0.5 * 255.0);  // lround: half away from zero
                out.push_back(static_cast<char>(b < 0 ? 0 : (b > 255 ? 255 : b)));
            }
    spit(path, out);
}

namespace {

// PNM header tokens: whitespace-separated, '#' comments to end of line.
std::string next_token(const std::vector<unsigned char>& b, std::size_t& pos) {
    while (pos < b.size()) {
        if (std::isspace(b[pos])) {
            ++pos;
        } else if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#')
        tok.push_back(static_cast<char>(b[pos++]));
    return tok;
}

}  // namespace

Tensor read_image(const std::filesystem::path& path) {
    std::vector<unsigned char> bytes = slurp(path);
    std::size_t pos = 0;
    std::string magic = next_token(bytes, pos);
    std::size_t channels;
    if (magic == "P5")
        channels = 1;
    else if (magic == "P6")
        channels = 3;
    else
        throw ParseError("unsupported image magic in " + path.string());
    std::string ws = next_token(bytes, pos);
    std::string hs = next_token(bytes, pos);
    std::string ms = next_token(bytes, pos);
    std::size_t w, h;
    try {
        w = std::stoul(ws);
        h = std::stoul(hs);
    } catch (const std::exception&) {
        throw ParseError("malformed image dimensions in " + path.string());
    }
    if (ms != "255") throw ParseError("only maxval 255 supported in " + path.string());
    if (w == 0 || h == 0) throw ParseError("zero image dimension in " + path.string());
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw ParseError("missing header terminator in " + path.string());
    ++pos;  // single whitespace byte after maxval
    std::size_t need = w * h * channels;
    if (bytes.size() - pos != need)
        throw ParseError("truncated image payload in " + path.string() + ": expected " +
                         std::to_string(need) + " bytes, got " + std::to_string(bytes.size() - pos));
    Tensor img = Tensor::image(channels, h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t k = 0; k < channels; ++k)
                img.at(k, y, x) =
                    static_cast<double>(bytes[pos++]) * (2.0 / 255.0) - 1.0;
    return img;
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::uint64_t file_digest(const std::filesystem::path& path) {
    std::vector<unsigned char> bytes = slurp(path);
    return fnv1a64(bytes.data(), bytes.size());
}

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

}  // namespace inv2inv
