#pragma once

#include <fstream>
#include <string>

#include "corrpose/error.hpp"
#include "corrpose/io/image.hpp"

namespace corrpose {

/// Binary PPM (P6). Expects an H x W x 3 byte image.
inline void write_ppm(const Image<unsigned char>& rgb, const std::string& path) {
    if (rgb.channels() != 3) raise(ErrorCode::InvalidConfig, "PPM needs 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path);
    out << "P6\n" << rgb.width() << " " << rgb.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data().data()),
              static_cast<std::streamsize>(rgb.data().size()));
    if (!out) raise(ErrorCode::IoError, "short write to " + path);
}

/// Binary PGM (P5). Expects an H x W x 1 byte image.
inline void write_pgm(const Image<unsigned char>& gray, const std::string& path) {
    if (gray.channels() != 1) raise(ErrorCode::InvalidConfig, "PGM needs 1 channel");
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path);
    out << "P5\n" << gray.width() << " " << gray.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(gray.data().data()),
              static_cast<std::streamsize>(gray.data().size()));
    if (!out) raise(ErrorCode::IoError, "short write to " + path);
}

}  // namespace corrpose
