#pragma once

// PNG/JPEG codecs for ImageBuffer. Requires linking libpng and libjpeg
// (target longtail_io in the build).

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "longtail/errors.hpp"
#include "longtail/image.hpp"

namespace longtail {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

inline ImageBuffer read_png_file(const std::string& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw data_error("png read failed for '" + path + "': " + image.message);
    image.format = PNG_FORMAT_RGB;
    ImageBuffer out(static_cast<int>(image.width), static_cast<int>(image.height));
    if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw data_error("png decode failed for '" + path + "': " + msg);
    }
    return out;
}

inline ImageBuffer read_jpeg_file(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw data_error("cannot open image '" + path + "'");
    jpeg_decompress_struct cinfo{};
    JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw data_error("jpeg decode failed for '" + path + "': " + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    ImageBuffer out(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height));
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.px(0, static_cast<int>(cinfo.output_scanline));
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

} // namespace detail

// Decodes by magic bytes, so the extension does not have to be truthful.
inline ImageBuffer read_image(const std::string& path) {
    detail::FilePtr probe(std::fopen(path.c_str(), "rb"));
    if (!probe) throw data_error("cannot open image '" + path + "'");
    unsigned char magic[8] = {};
    std::size_t got = std::fread(magic, 1, sizeof(magic), probe.get());
    probe.reset();
    if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) return detail::read_png_file(path);
    if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) return detail::read_jpeg_file(path);
    throw data_error("'" + path + "' is neither PNG nor JPEG");
}

inline void write_png(const std::string& path, const ImageBuffer& img) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels.data(), 0, nullptr))
        throw data_error("png write failed for '" + path + "': " + image.message);
}

inline void write_jpeg(const std::string& path, const ImageBuffer& img, int quality) {
    if (quality < 1 || quality > 100)
        throw std::invalid_argument("jpeg quality must be in [1,100]");
    detail::FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw data_error("cannot open '" + path + "' for writing");
    jpeg_compress_struct cinfo{};
    detail::JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = detail::jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        throw data_error("jpeg write failed for '" + path + "': " + err.message);
    }
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, file.get());
    cinfo.image_width = static_cast<JDIMENSION>(img.width);
    cinfo.image_height = static_cast<JDIMENSION>(img.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    std::vector<JSAMPLE> row(static_cast<std::size_t>(img.width) * 3);
    while (cinfo.next_scanline < cinfo.image_height) {
        const std::uint8_t* src = img.px(0, static_cast<int>(cinfo.next_scanline));
        std::copy(src, src + row.size(), row.data());
        JSAMPROW rp = row.data();
        jpeg_write_scanlines(&cinfo, &rp, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
}

} // namespace longtail
