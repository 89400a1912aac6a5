#include "afford/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include <jpeglib.h>
#include <png.h>

namespace afford {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) throw std::runtime_error("cannot open file: " + path.string());
    return f;
}

struct PngRead {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngRead() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWrite {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWrite() { png_destroy_write_struct(&png, &info); }
};

// Decodes any PNG to 16-bit samples; reports the source channel count.
void read_png_16(const std::filesystem::path& path, int& h, int& w, int& channels,
                 std::vector<uint16_t>& data) {
    FilePtr f = open_file(path, "rb");
    PngRead ctx;
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw std::runtime_error("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png)))
        throw std::runtime_error("PNG decode failed: " + path.string());

    png_init_io(ctx.png, f.get());
    png_read_info(ctx.png, ctx.info);

    png_set_palette_to_rgb(ctx.png);
    png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
    png_set_strip_alpha(ctx.png);
    if (png_get_bit_depth(ctx.png, ctx.info) < 16) png_set_expand_16(ctx.png);
    png_set_swap(ctx.png);  // libpng emits big-endian 16-bit; we want host LE
    png_read_update_info(ctx.png, ctx.info);

    h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
    w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
    channels = png_get_channels(ctx.png, ctx.info);

    data.resize(static_cast<std::size_t>(h) * w * channels);
    std::vector<png_bytep> rows(h);
    for (int r = 0; r < h; ++r)
        rows[r] = reinterpret_cast<png_bytep>(data.data() + static_cast<std::size_t>(r) * w * channels);
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);
}

void write_png(const std::filesystem::path& path, int h, int w, int channels,
               int bit_depth, const void* rows_data, std::size_t row_bytes) {
    FilePtr f = open_file(path, "wb");
    PngWrite ctx;
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw std::runtime_error("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png)))
        throw std::runtime_error("PNG encode failed: " + path.string());

    png_init_io(ctx.png, f.get());
    const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(ctx.png, ctx.info, w, h, bit_depth, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    if (bit_depth == 16) png_set_swap(ctx.png);

    std::vector<png_bytep> rows(h);
    for (int r = 0; r < h; ++r)
        rows[r] = const_cast<png_bytep>(static_cast<const png_byte*>(rows_data) + r * row_bytes);
    png_write_image(ctx.png, rows.data());
    png_write_end(ctx.png, nullptr);
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    jmp_buf env;
};

void jpeg_error_trampoline(j_common_ptr cinfo) {
    longjmp(reinterpret_cast<JpegErrorMgr*>(cinfo->err)->env, 1);
}

ImageRGB load_jpeg(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    jpeg_decompress_struct cinfo{};
    JpegErrorMgr jerr{};
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_trampoline;
    jpeg_create_decompress(&cinfo);
    struct Guard {
        jpeg_decompress_struct* c;
        ~Guard() { jpeg_destroy_decompress(c); }
    } guard{&cinfo};

    ImageRGB img;
    if (setjmp(jerr.env))
        throw std::runtime_error("JPEG decode failed: " + path.string());

    jpeg_stdio_src(&cinfo, f.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    img = ImageRGB(static_cast<int>(cinfo.output_height), static_cast<int>(cinfo.output_width));
    std::vector<JSAMPLE> row(static_cast<std::size_t>(img.width) * 3);
    JSAMPROW rowp = row.data();
    for (int r = 0; r < img.height; ++r) {
        jpeg_read_scanlines(&cinfo, &rowp, 1);
        for (int i = 0; i < img.width * 3; ++i)
            img.pixels[static_cast<std::size_t>(r) * img.width * 3 + i] = row[i] / 255.0f;
    }
    jpeg_finish_decompress(&cinfo);
    return img;
}

constexpr char kSidecarMagic[4] = {'A', 'F', 'M', 'P'};

}  // namespace

ImageRGB load_image(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".jpg" || ext == ".jpeg") return load_jpeg(path);
    if (ext != ".png")
        throw std::invalid_argument("load_image: unsupported extension " + ext +
                                    " (png/jpg/jpeg)");
    int h, w, ch;
    std::vector<uint16_t> raw;
    read_png_16(path, h, w, ch, raw);
    ImageRGB img(h, w);
    for (std::size_t p = 0; p < static_cast<std::size_t>(h) * w; ++p) {
        for (int c = 0; c < 3; ++c) {
            const uint16_t v = ch == 1 ? raw[p] : raw[p * ch + std::min(c, ch - 1)];
            img.pixels[p * 3 + c] = v / 65535.0f;
        }
    }
    return img;
}

ImageGray load_gray_png(const std::filesystem::path& path) {
    int h, w, ch;
    std::vector<uint16_t> raw;
    read_png_16(path, h, w, ch, raw);
    if (ch != 1)
        throw std::invalid_argument("load_gray_png: expected single-channel PNG, got " +
                                    std::to_string(ch) + " channels: " + path.string());
    ImageGray img(h, w);
    for (std::size_t p = 0; p < img.pixels.size(); ++p) img.pixels[p] = raw[p] / 65535.0f;
    return img;
}

void save_image_png(const ImageRGB& img, const std::filesystem::path& path) {
    std::vector<uint8_t> bytes(static_cast<std::size_t>(img.height) * img.width * 3);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const float v = std::clamp(img.pixels[i], 0.0f, 1.0f);
        bytes[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    write_png(path, img.height, img.width, 3, 8, bytes.data(),
              static_cast<std::size_t>(img.width) * 3);
}

void save_map_png(const DenseMap& map, const std::filesystem::path& path) {
    const DenseMap norm = minmax_normalize(map);
    std::vector<uint16_t> bytes(norm.size());
    for (std::size_t i = 0; i < norm.size(); ++i)
        bytes[i] = static_cast<uint16_t>(std::lround(norm[i] * 65535.0));
    write_png(path, map.height(), map.width(), 1, 16, bytes.data(),
              static_cast<std::size_t>(map.width()) * 2);
}

DenseMap load_map_png(const std::filesystem::path& path) {
    ImageGray g = load_gray_png(path);
    DenseMap map(g.height, g.width);
    for (std::size_t i = 0; i < map.size(); ++i) map[i] = g.pixels[i];
    return map;
}

void save_map_sidecar(const DenseMap& map, const std::filesystem::path& path) {
    if (map.height() > 65535 || map.width() > 65535)
        throw std::invalid_argument("save_map_sidecar: dimensions exceed u16");
    FilePtr f = open_file(path, "wb");
    uint16_t dims[2] = {static_cast<uint16_t>(map.height()), static_cast<uint16_t>(map.width())};
    std::fwrite(kSidecarMagic, 1, 4, f.get());
    std::fwrite(dims, 2, 2, f.get());
    std::vector<float> vals(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) vals[i] = static_cast<float>(map[i]);
    if (std::fwrite(vals.data(), 4, vals.size(), f.get()) != vals.size())
        throw std::runtime_error("save_map_sidecar: short write: " + path.string());
}

DenseMap load_map_sidecar(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    char magic[4];
    uint16_t dims[2];
    if (std::fread(magic, 1, 4, f.get()) != 4 || std::memcmp(magic, kSidecarMagic, 4) != 0)
        throw std::runtime_error("load_map_sidecar: bad magic: " + path.string());
    if (std::fread(dims, 2, 2, f.get()) != 2)
        throw std::runtime_error("load_map_sidecar: truncated header: " + path.string());
    const int h = dims[0], w = dims[1];
    if (h < 1 || w < 1) throw std::runtime_error("load_map_sidecar: bad dimensions");
    std::vector<float> vals(static_cast<std::size_t>(h) * w);
    if (std::fread(vals.data(), 4, vals.size(), f.get()) != vals.size())
        throw std::runtime_error("load_map_sidecar: truncated payload: " + path.string());
    DenseMap map(h, w);
    for (std::size_t i = 0; i < map.size(); ++i) map[i] = vals[i];
    return map;
}

DenseMap load_map_any(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".afmp") return load_map_sidecar(path);
    if (ext == ".png") return load_map_png(path);
    throw std::invalid_argument("load_map_any: unsupported extension: " + path.string());
}

namespace {

inline float cubic_kernel(float t) {
    // Catmull-Rom (a = -0.5)
    const float a = -0.5f;
    const float at = std::fabs(t);
    if (at <= 1.0f) return ((a + 2.0f) * at - (a + 3.0f)) * at * at + 1.0f;
    if (at < 2.0f) return (((at - 5.0f) * at + 8.0f) * at - 4.0f) * a;
    return 0.0f;
}

template <class GetPx>
float bicubic_sample(GetPx&& get, int in_dim_h, int in_dim_w, double sy, double sx) {
    const int y0 = static_cast<int>(std::floor(sy));
    const int x0 = static_cast<int>(std::floor(sx));
    float acc = 0.0f, wsum = 0.0f;
    for (int dy = -1; dy <= 2; ++dy) {
        const int yy = std::clamp(y0 + dy, 0, in_dim_h - 1);
        const float wy = cubic_kernel(static_cast<float>(sy - (y0 + dy)));
        for (int dx = -1; dx <= 2; ++dx) {
            const int xx = std::clamp(x0 + dx, 0, in_dim_w - 1);
            const float wx = cubic_kernel(static_cast<float>(sx - (x0 + dx)));
            acc += wy * wx * get(yy, xx);
            wsum += wy * wx;
        }
    }
    return wsum != 0.0f ? acc / wsum : 0.0f;
}

inline double src_coord(int i, int out_dim, int in_dim) {
    if (out_dim == 1) return (in_dim - 1) / 2.0;
    return static_cast<double>(i) * (in_dim - 1) / (out_dim - 1);
}

}  // namespace

ImageRGB resize_image(const ImageRGB& img, int out_h, int out_w) {
    if (out_h == img.height && out_w == img.width) return img;
    ImageRGB out(out_h, out_w);
    for (int r = 0; r < out_h; ++r) {
        const double sy = src_coord(r, out_h, img.height);
        for (int c = 0; c < out_w; ++c) {
            const double sx = src_coord(c, out_w, img.width);
            for (int ch = 0; ch < 3; ++ch) {
                const float v = bicubic_sample(
                    [&](int y, int x) { return img.at(y, x, ch); }, img.height, img.width, sy, sx);
                out.at(r, c, ch) = std::clamp(v, 0.0f, 1.0f);
            }
        }
    }
    return out;
}

ImageGray resize_image(const ImageGray& img, int out_h, int out_w) {
    if (out_h == img.height && out_w == img.width) return img;
    ImageGray out(out_h, out_w);
    for (int r = 0; r < out_h; ++r) {
        const double sy = src_coord(r, out_h, img.height);
        for (int c = 0; c < out_w; ++c) {
            const double sx = src_coord(c, out_w, img.width);
            const float v = bicubic_sample([&](int y, int x) { return img.at(y, x); },
                                           img.height, img.width, sy, sx);
            out.at(r, c) = std::clamp(v, 0.0f, 1.0f);
        }
    }
    return out;
}

ImageRGB replicate3(const ImageGray& depth) {
    ImageRGB out(depth.height, depth.width);
    for (std::size_t p = 0; p < depth.pixels.size(); ++p)
        out.pixels[p * 3] = out.pixels[p * 3 + 1] = out.pixels[p * 3 + 2] = depth.pixels[p];
    return out;
}

}  // namespace afford
