#include <algorithm>
#include <cstdio>
#include <csetjmp>
#include <cstring>
#include <memory>

#include <jpeglib.h>
#include <png.h>

#include "edlm/image.hpp"

namespace edlm {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_suffix(const std::string& s, const char* suffix) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const std::string suf(suffix);
    return lower.size() >= suf.size() && lower.compare(lower.size() - suf.size(), suf.size(), suf) == 0;
}

// libjpeg reports fatal problems through its error manager; route them into
// a longjmp so they surface as exceptions instead of exit().
struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

ImageU8 decode_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw IoError("corrupt PNG stream: " + path + " (" + image.message + ")");
    image.format = PNG_FORMAT_RGB;
    ImageU8 out(static_cast<int>(image.height), static_cast<int>(image.width));
    if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("corrupt PNG stream: " + path + " (" + image.message + ")");
    }
    return out;
}

ImageU8 decode_jpeg(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError("cannot open image file: " + path);

    jpeg_decompress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError("corrupt JPEG stream: " + path + " (" + err.message + ")");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    if (cinfo.jpeg_color_space == JCS_CMYK || cinfo.jpeg_color_space == JCS_YCCK) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError("unsupported JPEG color space (CMYK/YCCK): " + path);
    }
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    if (cinfo.output_components != 3) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError("unsupported JPEG component count: " + path);
    }
    ImageU8 out(static_cast<int>(cinfo.output_height), static_cast<int>(cinfo.output_width));
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = &out.data[static_cast<std::size_t>(cinfo.output_scanline) *
                                 cinfo.output_width * 3];
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

}  // namespace

ImageU8 decode_image(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError("missing image file: " + path);
    unsigned char magic[4] = {0, 0, 0, 0};
    const std::size_t got = std::fread(magic, 1, sizeof(magic), file.get());
    file.reset();
    if (got >= 4 && magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
        return decode_png(path);
    if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) return decode_jpeg(path);
    throw IoError("unsupported image format (not PNG or JPEG): " + path);
}

void encode_image(const std::string& path, const ImageU8& img) {
    if (img.height < 1 || img.width < 1) throw ShapeError("cannot encode an empty image");
    if (has_suffix(path, ".png")) {
        png_image image;
        std::memset(&image, 0, sizeof(image));
        image.version = PNG_IMAGE_VERSION;
        image.width = static_cast<png_uint_32>(img.width);
        image.height = static_cast<png_uint_32>(img.height);
        image.format = PNG_FORMAT_RGB;
        if (!png_image_write_to_file(&image, path.c_str(), 0, img.data.data(), 0, nullptr))
            throw IoError("cannot write PNG: " + path + " (" + image.message + ")");
        return;
    }
    if (has_suffix(path, ".jpg") || has_suffix(path, ".jpeg")) {
        FilePtr file(std::fopen(path.c_str(), "wb"));
        if (!file) throw IoError("cannot open for writing: " + path);
        jpeg_compress_struct cinfo;
        JpegErrorMgr err;
        cinfo.err = jpeg_std_error(&err.pub);
        err.pub.error_exit = jpeg_error_exit;
        if (setjmp(err.jump)) {
            jpeg_destroy_compress(&cinfo);
            throw IoError("cannot write JPEG: " + path + " (" + err.message + ")");
        }
        jpeg_create_compress(&cinfo);
        jpeg_stdio_dest(&cinfo, file.get());
        cinfo.image_width = static_cast<JDIMENSION>(img.width);
        cinfo.image_height = static_cast<JDIMENSION>(img.height);
        cinfo.input_components = 3;
        cinfo.in_color_space = JCS_RGB;
        jpeg_set_defaults(&cinfo);
        jpeg_set_quality(&cinfo, 95, TRUE);
        jpeg_start_compress(&cinfo, TRUE);
        std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
        while (cinfo.next_scanline < cinfo.image_height) {
            std::memcpy(row.data(),
                        &img.data[static_cast<std::size_t>(cinfo.next_scanline) * img.width * 3],
                        row.size());
            JSAMPROW rp = row.data();
            jpeg_write_scanlines(&cinfo, &rp, 1);
        }
        jpeg_finish_compress(&cinfo);
        jpeg_destroy_compress(&cinfo);
        return;
    }
    throw ValueError("unsupported output extension (use .png, .jpg or .jpeg): " + path);
}

}  // namespace edlm
