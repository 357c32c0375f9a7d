#include "diffcal/error.hpp"
#include "diffcal/io.hpp"

#include <png.h>

#include <cstring>

namespace diffcal {

namespace {

void require_file(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw Error(ErrorKind::MissingFile, path.string());
}

}  // namespace

std::pair<std::size_t, std::size_t> png_dimensions(const fs::path& path) {
    require_file(path);
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw Error(ErrorKind::Parse, path.string() + ": " + image.message);
    }
    const std::pair<std::size_t, std::size_t> dims{image.width, image.height};
    png_image_free(&image);
    return dims;
}

RgbImage read_png(const fs::path& path) {
    require_file(path);
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw Error(ErrorKind::Parse, path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    RgbImage out(image.width, image.height);
    if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw Error(ErrorKind::Parse, path.string() + ": " + msg);
    }
    return out;
}

void write_png(const RgbImage& img, const fs::path& path) {
    if (img.empty() || img.data.size() != img.width * img.height * 3) {
        throw Error(ErrorKind::Shape, "cannot write malformed image to " + path.string());
    }
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;
    image.flags = PNG_IMAGE_FLAG_FAST;
    if (!png_image_write_to_file(&image, path.c_str(), 0, img.data.data(), 0, nullptr)) {
        throw Error(ErrorKind::Io, path.string() + ": " + image.message);
    }
}

}  // namespace diffcal
