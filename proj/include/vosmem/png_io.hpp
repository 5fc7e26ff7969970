#pragma once

#include <cstring>
#include <fstream>
#include <string>

#include <zlib.h>

#include "vosmem/core.hpp"

namespace vosmem {

inline std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write: " + path);
}

namespace pngdetail {

inline std::vector<uint8_t> zlib_inflate(const uint8_t* data, size_t n) {
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw std::runtime_error("png: inflateInit failed");
    zs.next_in = const_cast<Bytef*>(data);
    zs.avail_in = static_cast<uInt>(n);
    std::vector<uint8_t> out;
    std::vector<uint8_t> buf(1 << 16);
    int ret = Z_OK;
    while (ret != Z_STREAM_END) {
        zs.next_out = buf.data();
        zs.avail_out = static_cast<uInt>(buf.size());
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw std::runtime_error("png: corrupt compressed stream");
        }
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    }
    inflateEnd(&zs);
    return out;
}

inline std::vector<uint8_t> zlib_deflate(const std::vector<uint8_t>& data) {
    uLongf bound = compressBound(static_cast<uLong>(data.size()));
    std::vector<uint8_t> out(bound);
    if (compress2(out.data(), &bound, data.data(), static_cast<uLong>(data.size()), 6) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    out.resize(bound);
    return out;
}

inline uint32_t read_be32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

inline void push_be32(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x >> 24));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x));
}

inline void push_chunk(std::vector<uint8_t>& out, const char type[4],
                       const std::vector<uint8_t>& data) {
    push_be32(out, static_cast<uint32_t>(data.size()));
    const size_t type_pos = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, out.data() + type_pos, static_cast<uInt>(4 + data.size()));
    push_be32(out, static_cast<uint32_t>(crc));
}

inline uint8_t paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<uint8_t>(a);
    if (pb <= pc) return static_cast<uint8_t>(b);
    return static_cast<uint8_t>(c);
}

}  // namespace pngdetail

// Decoded 8-bit PNG. For palette images `pixels` holds the raw indices and
// `palette` the PLTE entries (3 bytes each).
struct PngImage {
    int h = 0, w = 0;
    int channels = 0;  // 1 gray, 2 gray+alpha, 3 rgb, 4 rgba; 1 for palette
    bool indexed = false;
    std::vector<uint8_t> pixels;
    std::vector<uint8_t> palette;
};

inline PngImage decode_png(const std::vector<uint8_t>& bytes, const std::string& name = "png") {
    static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
        throw std::runtime_error(name + ": not a PNG file");

    PngImage img;
    int bit_depth = 0, color_type = -1;
    std::vector<uint8_t> idat;
    size_t pos = 8;
    while (pos + 8 <= bytes.size()) {
        const uint32_t len = pngdetail::read_be32(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) throw std::runtime_error(name + ": truncated chunk");
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const uint8_t* data = bytes.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw std::runtime_error(name + ": bad IHDR");
            img.w = static_cast<int>(pngdetail::read_be32(data));
            img.h = static_cast<int>(pngdetail::read_be32(data + 4));
            bit_depth = data[8];
            color_type = data[9];
            if (data[12] != 0) throw std::runtime_error(name + ": interlaced PNG not supported");
            if (bit_depth != 8)
                throw std::runtime_error(name + ": only 8-bit PNGs are supported");
        } else if (std::memcmp(type, "PLTE", 4) == 0) {
            img.palette.assign(data, data + len);
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (img.w <= 0 || img.h <= 0) throw std::runtime_error(name + ": missing IHDR");

    switch (color_type) {
        case 0: img.channels = 1; break;
        case 2: img.channels = 3; break;
        case 3: img.channels = 1; img.indexed = true; break;
        case 4: img.channels = 2; break;
        case 6: img.channels = 4; break;
        default: throw std::runtime_error(name + ": unsupported PNG color type");
    }

    const std::vector<uint8_t> raw = pngdetail::zlib_inflate(idat.data(), idat.size());
    const size_t stride = static_cast<size_t>(img.w) * img.channels;
    if (raw.size() != (stride + 1) * static_cast<size_t>(img.h))
        throw std::runtime_error(name + ": decompressed size mismatch");

    img.pixels.resize(stride * static_cast<size_t>(img.h));
    const int bpp = img.channels;
    for (int y = 0; y < img.h; ++y) {
        const uint8_t filter = raw[(stride + 1) * static_cast<size_t>(y)];
        const uint8_t* src = raw.data() + (stride + 1) * static_cast<size_t>(y) + 1;
        uint8_t* dst = img.pixels.data() + stride * static_cast<size_t>(y);
        const uint8_t* prev = y > 0 ? dst - stride : nullptr;
        for (size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<size_t>(bpp) ? dst[i - bpp] : 0;
            const int b = prev ? prev[i] : 0;
            const int c = (prev && i >= static_cast<size_t>(bpp)) ? prev[i - bpp] : 0;
            int x = src[i];
            switch (filter) {
                case 0: break;
                case 1: x += a; break;
                case 2: x += b; break;
                case 3: x += (a + b) / 2; break;
                case 4: x += pngdetail::paeth(a, b, c); break;
                default: throw std::runtime_error(name + ": unknown PNG filter");
            }
            dst[i] = static_cast<uint8_t>(x & 0xff);
        }
    }
    return img;
}

inline std::vector<uint8_t> encode_png(int h, int w, int channels, const uint8_t* pixels,
                                       const std::vector<uint8_t>* palette = nullptr) {
    std::vector<uint8_t> out = {137, 80, 78, 71, 13, 10, 26, 10};
    std::vector<uint8_t> ihdr;
    pngdetail::push_be32(ihdr, static_cast<uint32_t>(w));
    pngdetail::push_be32(ihdr, static_cast<uint32_t>(h));
    ihdr.push_back(8);  // bit depth
    int color_type = 0;
    if (palette) color_type = 3;
    else if (channels == 3) color_type = 2;
    else if (channels == 4) color_type = 6;
    else if (channels == 2) color_type = 4;
    ihdr.push_back(static_cast<uint8_t>(color_type));
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // no interlace
    pngdetail::push_chunk(out, "IHDR", ihdr);
    if (palette) pngdetail::push_chunk(out, "PLTE", *palette);

    const size_t stride = static_cast<size_t>(w) * channels;
    std::vector<uint8_t> raw((stride + 1) * static_cast<size_t>(h));
    for (int y = 0; y < h; ++y) {
        raw[(stride + 1) * static_cast<size_t>(y)] = 0;  // filter: none
        std::memcpy(raw.data() + (stride + 1) * static_cast<size_t>(y) + 1,
                    pixels + stride * static_cast<size_t>(y), stride);
    }
    pngdetail::push_chunk(out, "IDAT", pngdetail::zlib_deflate(raw));
    pngdetail::push_chunk(out, "IEND", {});
    return out;
}

// Standard benchmark-style palette: channel bits of the id spread across the
// high bits of r/g/b.
inline std::vector<uint8_t> mask_palette() {
    std::vector<uint8_t> pal(256 * 3, 0);
    for (int i = 0; i < 256; ++i) {
        int lab = i, shift = 7;
        uint8_t r = 0, g = 0, b = 0;
        while (lab && shift >= 0) {
            r |= static_cast<uint8_t>(((lab >> 0) & 1) << shift);
            g |= static_cast<uint8_t>(((lab >> 1) & 1) << shift);
            b |= static_cast<uint8_t>(((lab >> 2) & 1) << shift);
            lab >>= 3;
            --shift;
        }
        pal[static_cast<size_t>(i) * 3 + 0] = r;
        pal[static_cast<size_t>(i) * 3 + 1] = g;
        pal[static_cast<size_t>(i) * 3 + 2] = b;
    }
    return pal;
}

// Indexed mask <-> PNG. Written as 8-bit palette PNG; on read the palette is
// ignored and the raw index is the object id.
inline void write_mask_png(const std::string& path, const IndexMap& mask) {
    std::vector<uint8_t> px(mask.v.size());
    for (size_t i = 0; i < mask.v.size(); ++i) {
        require(mask.v[i] >= 0 && mask.v[i] <= 255, "write_mask_png: object id out of 8-bit range");
        px[i] = static_cast<uint8_t>(mask.v[i]);
    }
    const std::vector<uint8_t> pal = mask_palette();
    write_file_bytes(path, encode_png(mask.h, mask.w, 1, px.data(), &pal));
}

inline IndexMap read_mask_png(const std::string& path) {
    const PngImage img = decode_png(read_file_bytes(path), path);
    if (!img.indexed && img.channels != 1)
        throw std::runtime_error(path + ": mask PNG must be single-channel (gray or palette)");
    IndexMap m(img.h, img.w);
    for (size_t i = 0; i < m.v.size(); ++i) m.v[i] = img.pixels[i];
    return m;
}

// RGB frame <-> PNG, values in [0, 1].
inline void write_frame_png(const std::string& path, const Tensor& frame) {
    require(frame.rank() == 3 && frame.extent(2) == 3, "write_frame_png: H x W x 3 required");
    const int h = frame.extent(0), w = frame.extent(1);
    std::vector<uint8_t> px(static_cast<size_t>(h) * w * 3);
    for (size_t i = 0; i < px.size(); ++i) {
        const float v = std::clamp(frame[i], 0.0f, 1.0f);
        px[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    write_file_bytes(path, encode_png(h, w, 3, px.data()));
}

inline Tensor read_frame_png(const std::string& path) {
    const PngImage img = decode_png(read_file_bytes(path), path);
    Tensor out({img.h, img.w, 3});
    const size_t n = static_cast<size_t>(img.h) * img.w;
    for (size_t i = 0; i < n; ++i) {
        uint8_t r, g, b;
        if (img.indexed) {
            const size_t pi = static_cast<size_t>(img.pixels[i]) * 3;
            if (pi + 2 >= img.palette.size())
                throw std::runtime_error(path + ": palette index out of range");
            r = img.palette[pi];
            g = img.palette[pi + 1];
            b = img.palette[pi + 2];
        } else if (img.channels == 1 || img.channels == 2) {
            r = g = b = img.pixels[i * img.channels];
        } else {
            r = img.pixels[i * img.channels];
            g = img.pixels[i * img.channels + 1];
            b = img.pixels[i * img.channels + 2];
        }
        out[i * 3 + 0] = static_cast<float>(r) / 255.0f;
        out[i * 3 + 1] = static_cast<float>(g) / 255.0f;
        out[i * 3 + 2] = static_cast<float>(b) / 255.0f;
    }
    return out;
}

}  // namespace vosmem
