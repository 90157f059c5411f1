#pragma once

// Minimal RIFF/WAVE reader and writer: PCM 8/16/24/32-bit and 32-bit float,
// any channel count (downmixed to mono by channel mean on load).

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "physaudit/audio.hpp"
#include "physaudit/error.hpp"

namespace physaudit::io {

enum class WavFormat { pcm8, pcm16, pcm24, pcm32, float32 };

namespace detail {

inline std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void push_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(v & 0xff);
    out.push_back((v >> 8) & 0xff);
    out.push_back((v >> 16) & 0xff);
    out.push_back((v >> 24) & 0xff);
}

inline void push_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(v & 0xff);
    out.push_back((v >> 8) & 0xff);
}

}  // namespace detail

inline AudioClip load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("file_not_found", "cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw Error("bad_riff", "'" + path + "' is not a RIFF/WAVE file");
    }

    std::uint16_t format_tag = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    bool have_fmt = false;
    const std::uint8_t* data = nullptr;
    std::uint32_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t size = detail::read_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (body + 16 > bytes.size() || size < 16) {
                throw Error("bad_fmt", "fmt chunk truncated in '" + path + "'");
            }
            format_tag = detail::read_u16(bytes.data() + body);
            channels = detail::read_u16(bytes.data() + body + 2);
            sample_rate = detail::read_u32(bytes.data() + body + 4);
            bits = detail::read_u16(bytes.data() + body + 14);
            if (format_tag == 0xFFFE) {  // WAVE_FORMAT_EXTENSIBLE: SubFormat's first word
                if (body + 26 > bytes.size()) throw Error("bad_fmt", "extensible fmt truncated");
                format_tag = detail::read_u16(bytes.data() + body + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (body + size > bytes.size()) {
                throw Error("truncated_data", "data chunk claims " + std::to_string(size) +
                            " bytes past the end of '" + path + "'");
            }
            data = bytes.data() + body;
            data_size = size;
        }
        pos = body + size + (size % 2);  // chunks are word-aligned
    }

    if (!have_fmt) throw Error("missing_fmt", "no fmt chunk in '" + path + "'");
    if (data == nullptr) throw Error("missing_data", "no data chunk in '" + path + "'");
    if (channels == 0 || sample_rate == 0) throw Error("bad_fmt", "zero channels or rate");
    if (format_tag != 1 && format_tag != 3) {
        throw Error("unsupported_codec", "fmt tag " + std::to_string(format_tag) +
                    " (only PCM and IEEE float)");
    }
    if (format_tag == 3 && bits != 32) throw Error("unsupported_codec", "float WAV must be 32-bit");
    if (format_tag == 1 && bits != 8 && bits != 16 && bits != 24 && bits != 32) {
        throw Error("unsupported_codec", std::to_string(bits) + "-bit PCM not supported");
    }

    const std::uint32_t bytes_per_sample = bits / 8;
    const std::uint32_t frame_size = bytes_per_sample * channels;
    if (frame_size == 0 || data_size % frame_size != 0) {
        throw Error("truncated_data", "data size is not a whole number of frames");
    }
    const std::size_t n_frames = data_size / frame_size;

    AudioClip clip;
    clip.sample_rate = static_cast<int>(sample_rate);
    clip.samples.resize(n_frames, 0.0);
    for (std::size_t f = 0; f < n_frames; ++f) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
            const std::uint8_t* s = data + f * frame_size + c * bytes_per_sample;
            double v = 0.0;
            if (format_tag == 3) {
                float fv;
                std::memcpy(&fv, s, 4);
                v = fv;
            } else if (bits == 8) {
                v = (static_cast<int>(s[0]) - 128) / 128.0;
            } else if (bits == 16) {
                const auto i = static_cast<std::int16_t>(detail::read_u16(s));
                v = i / 32768.0;
            } else if (bits == 24) {
                std::int32_t i = s[0] | (s[1] << 8) | (s[2] << 16);
                if (i & 0x800000) i |= ~0xFFFFFF;
                v = i / 8388608.0;
            } else {  // 32-bit PCM
                const auto i = static_cast<std::int32_t>(detail::read_u32(s));
                v = i / 2147483648.0;
            }
            acc += v;
        }
        clip.samples[f] = acc / channels;
    }
    return clip;
}

inline void save_wav(const std::string& path, const AudioClip& clip,
                     WavFormat format = WavFormat::pcm16) {
    if (clip.sample_rate <= 0) throw Error("bad_rate", "save_wav: invalid sample rate");
    std::uint16_t bits = 16, tag = 1;
    switch (format) {
        case WavFormat::pcm8: bits = 8; break;
        case WavFormat::pcm16: bits = 16; break;
        case WavFormat::pcm24: bits = 24; break;
        case WavFormat::pcm32: bits = 32; break;
        case WavFormat::float32: bits = 32; tag = 3; break;
    }
    const std::uint32_t bytes_per_sample = bits / 8;
    const auto data_size = static_cast<std::uint32_t>(clip.samples.size() * bytes_per_sample);

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_size);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    detail::push_u32(out, 36 + data_size);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    detail::push_u32(out, 16);
    detail::push_u16(out, tag);
    detail::push_u16(out, 1);  // mono
    detail::push_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
    detail::push_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * bytes_per_sample);
    detail::push_u16(out, static_cast<std::uint16_t>(bytes_per_sample));
    detail::push_u16(out, bits);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    detail::push_u32(out, data_size);

    for (const double s : clip.samples) {
        if (tag == 3) {
            const auto fv = static_cast<float>(s);
            std::uint8_t b[4];
            std::memcpy(b, &fv, 4);
            out.insert(out.end(), b, b + 4);
        } else if (bits == 8) {
            const auto q = static_cast<int>(std::lround(s * 128.0) + 128);
            out.push_back(static_cast<std::uint8_t>(std::clamp(q, 0, 255)));
        } else if (bits == 16) {
            const auto q = static_cast<std::int32_t>(std::lround(s * 32768.0));
            const auto i = static_cast<std::int16_t>(std::clamp<std::int32_t>(q, -32768, 32767));
            detail::push_u16(out, static_cast<std::uint16_t>(i));
        } else if (bits == 24) {
            const auto q = static_cast<std::int64_t>(std::llround(s * 8388608.0));
            const auto i = static_cast<std::int32_t>(std::clamp<std::int64_t>(q, -8388608, 8388607));
            out.push_back(i & 0xff);
            out.push_back((i >> 8) & 0xff);
            out.push_back((i >> 16) & 0xff);
        } else {
            const auto q = static_cast<std::int64_t>(std::llround(s * 2147483648.0));
            const auto i = static_cast<std::int32_t>(
                std::clamp<std::int64_t>(q, -2147483648LL, 2147483647LL));
            detail::push_u32(out, static_cast<std::uint32_t>(i));
        }
    }

    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error("write_failed", "cannot write '" + path + "'");
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

}  // namespace physaudit::io
