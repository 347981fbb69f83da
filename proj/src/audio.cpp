// Copyright 2026 The sepbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sepbench/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "sepbench/errors.hpp"
#include "sepbench/parallel.hpp"

namespace sepbench {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] |
                                    (static_cast<std::uint16_t>(p[1]) << 8));
}

struct WavChunks {
  int format_tag = 0;
  int channels = 0;
  int sample_rate = 0;
  int bits_per_sample = 0;
  std::vector<unsigned char> data;
  std::size_t data_size = 0;
};

// Parses the RIFF container; reads the data payload only when requested.
WavChunks parse_wav(const std::string& path, bool want_data) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::kIo, "cannot open WAV file: " + path);

  unsigned char header[12];
  in.read(reinterpret_cast<char*>(header), 12);
  require(in.gcount() == 12, Errc::kFormat, "truncated WAV header: " + path);
  require(std::memcmp(header, "RIFF", 4) == 0, Errc::kFormat,
          "not a RIFF file: " + path);
  require(std::memcmp(header + 8, "WAVE", 4) == 0, Errc::kFormat,
          "not a WAVE file: " + path);

  WavChunks out;
  bool have_fmt = false;
  bool have_data = false;
  while (in) {
    unsigned char chunk[8];
    in.read(reinterpret_cast<char*>(chunk), 8);
    if (in.gcount() < 8) break;
    const std::uint32_t size = read_u32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      require(size >= 16, Errc::kFormat, "short fmt chunk: " + path);
      std::vector<unsigned char> fmt(size);
      in.read(reinterpret_cast<char*>(fmt.data()), size);
      require(static_cast<std::uint32_t>(in.gcount()) == size, Errc::kFormat,
              "truncated fmt chunk: " + path);
      out.format_tag = read_u16(fmt.data());
      out.channels = read_u16(fmt.data() + 2);
      out.sample_rate = static_cast<int>(read_u32(fmt.data() + 4));
      out.bits_per_sample = read_u16(fmt.data() + 14);
      // WAVE_FORMAT_EXTENSIBLE carries the real tag in the sub-format GUID.
      if (out.format_tag == 0xFFFE && size >= 40) {
        out.format_tag = read_u16(fmt.data() + 24);
      }
      if (size & 1) in.seekg(1, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      out.data_size = size;
      if (want_data) {
        out.data.resize(size);
        in.read(reinterpret_cast<char*>(out.data.data()), size);
        require(static_cast<std::uint32_t>(in.gcount()) == size, Errc::kFormat,
                "truncated data chunk: " + path);
        if (size & 1) in.seekg(1, std::ios::cur);  // pad byte
      } else {
        in.seekg(size + (size & 1), std::ios::cur);
      }
      have_data = true;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
  require(have_fmt, Errc::kFormat, "missing fmt chunk: " + path);
  require(have_data, Errc::kFormat, "missing data chunk: " + path);
  require(out.channels >= 1 && out.channels <= 2, Errc::kUnsupportedCodec,
          "unsupported channel count in " + path);
  require(out.sample_rate > 0, Errc::kFormat, "invalid sample rate: " + path);
  return out;
}

int bytes_per_sample(const WavChunks& c, const std::string& path) {
  if (c.format_tag == 1 && c.bits_per_sample == 16) return 2;
  if (c.format_tag == 1 && c.bits_per_sample == 24) return 3;
  if (c.format_tag == 3 && c.bits_per_sample == 32) return 4;
  throw_error(Errc::kUnsupportedCodec,
              "unsupported WAV encoding (format " +
                  std::to_string(c.format_tag) + ", " +
                  std::to_string(c.bits_per_sample) + " bit) in " + path);
}

void append_u32(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(static_cast<unsigned char>(x & 0xFF));
  v.push_back(static_cast<unsigned char>((x >> 8) & 0xFF));
  v.push_back(static_cast<unsigned char>((x >> 16) & 0xFF));
  v.push_back(static_cast<unsigned char>((x >> 24) & 0xFF));
}

void append_u16(std::vector<unsigned char>& v, std::uint16_t x) {
  v.push_back(static_cast<unsigned char>(x & 0xFF));
  v.push_back(static_cast<unsigned char>((x >> 8) & 0xFF));
}

// Zeroth-order modified Bessel function, power series.
double bessel_i0(double x) {
  double sum = 1.0;
  double term = 1.0;
  const double half_x = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half_x / k) * (half_x / k);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

}  // namespace

AudioClip make_mono(std::vector<float> samples, int sample_rate) {
  AudioClip clip;
  clip.samples = std::move(samples);
  clip.sample_rate = sample_rate;
  clip.channels = 1;
  return clip;
}

WavInfo read_wav_info(const std::string& path) {
  const WavChunks c = parse_wav(path, false);
  const int bps = bytes_per_sample(c, path);
  WavInfo info;
  info.sample_rate = c.sample_rate;
  info.channels = c.channels;
  info.bits_per_sample = c.bits_per_sample;
  info.frames = c.data_size / static_cast<std::size_t>(bps * c.channels);
  return info;
}

AudioClip read_wav(const std::string& path) {
  const WavChunks c = parse_wav(path, true);
  const int bps = bytes_per_sample(c, path);
  const std::size_t frames =
      c.data.size() / static_cast<std::size_t>(bps * c.channels);

  AudioClip clip;
  clip.sample_rate = c.sample_rate;
  clip.channels = c.channels;
  clip.samples.resize(frames * static_cast<std::size_t>(c.channels));

  const unsigned char* p = c.data.data();
  for (std::size_t f = 0; f < frames; ++f) {
    for (int ch = 0; ch < c.channels; ++ch) {
      const std::size_t out_index =
          static_cast<std::size_t>(ch) * frames + f;
      if (bps == 2) {
        const std::int16_t v =
            static_cast<std::int16_t>(p[0] | (p[1] << 8));
        clip.samples[out_index] = static_cast<float>(v) / 32768.0f;
      } else if (bps == 3) {
        std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
        if (v & 0x800000) v |= ~0xFFFFFF;  // sign-extend
        clip.samples[out_index] = static_cast<float>(v) / 8388608.0f;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        clip.samples[out_index] = v;
      }
      p += bps;
    }
  }
  return clip;
}

void write_wav(const AudioClip& clip, const std::string& path,
               WavEncoding encoding) {
  require(!clip.samples.empty(), Errc::kPrecondition,
          "refusing to write an empty clip: " + path);
  require(clip.sample_rate > 0, Errc::kPrecondition,
          "clip has no sample rate: " + path);
  require(clip.channels >= 1 && clip.channels <= 2, Errc::kPrecondition,
          "unsupported channel count");

  const std::size_t frames = clip.frames();
  const int bps = encoding == WavEncoding::kPcm16 ? 2 : 4;
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(frames * clip.channels * bps);

  std::vector<unsigned char> buf;
  buf.reserve(44 + data_size);
  buf.insert(buf.end(), {'R', 'I', 'F', 'F'});
  append_u32(buf, 36 + data_size);
  buf.insert(buf.end(), {'W', 'A', 'V', 'E'});
  buf.insert(buf.end(), {'f', 'm', 't', ' '});
  append_u32(buf, 16);
  append_u16(buf, encoding == WavEncoding::kPcm16 ? 1 : 3);
  append_u16(buf, static_cast<std::uint16_t>(clip.channels));
  append_u32(buf, static_cast<std::uint32_t>(clip.sample_rate));
  append_u32(buf, static_cast<std::uint32_t>(clip.sample_rate * clip.channels *
                                             bps));
  append_u16(buf, static_cast<std::uint16_t>(clip.channels * bps));
  append_u16(buf, static_cast<std::uint16_t>(bps * 8));
  buf.insert(buf.end(), {'d', 'a', 't', 'a'});
  append_u32(buf, data_size);

  for (std::size_t f = 0; f < frames; ++f) {
    for (int ch = 0; ch < clip.channels; ++ch) {
      const float v = clip.samples[static_cast<std::size_t>(ch) * frames + f];
      if (encoding == WavEncoding::kPcm16) {
        long q = std::lround(static_cast<double>(v) * 32768.0);
        q = std::clamp(q, -32768L, 32767L);
        append_u16(buf, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        unsigned char raw[4];
        std::memcpy(raw, &v, 4);
        buf.insert(buf.end(), raw, raw + 4);
      }
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Errc::kIo, "cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  out.flush();
  require(out.good(), Errc::kIo, "write failed: " + path);
}

AudioClip downmix_mono(const AudioClip& clip) {
  require(clip.channels == 1 || clip.channels == 2, Errc::kPrecondition,
          "downmix_mono expects 1 or 2 channels");
  if (clip.channels == 1) return clip;
  const std::size_t frames = clip.frames();
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.channels = 1;
  out.samples.resize(frames);
  const float* left = clip.samples.data();
  const float* right = clip.samples.data() + frames;
  for (std::size_t i = 0; i < frames; ++i) {
    out.samples[i] = 0.5f * (left[i] + right[i]);
  }
  return out;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  require(target_rate > 0, Errc::kPrecondition, "target_rate must be > 0");
  require(clip.mono(), Errc::kPrecondition, "resample expects a mono clip");
  if (target_rate == clip.sample_rate) return clip;

  const std::size_t in_len = clip.samples.size();
  const double ratio =
      static_cast<double>(target_rate) / static_cast<double>(clip.sample_rate);
  const std::size_t out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(in_len) * ratio));

  AudioClip out;
  out.sample_rate = target_rate;
  out.channels = 1;
  out.samples.resize(out_len);
  if (in_len == 0 || out_len == 0) return out;

  // Kaiser-windowed sinc, 64 zero crossings at the cutoff. Cutoff sits at
  // 0.475 of the smaller Nyquist so tones below 0.45*min(rates) stay inside
  // the passband.
  const double kZeroCrossings = 64.0;
  const double kBeta = 9.0;
  const double cutoff = 0.475 * std::min(1.0, ratio);  // cycles per in-sample
  const double half_width = kZeroCrossings / (2.0 * cutoff);
  const double i0_beta = bessel_i0(kBeta);
  const float* in = clip.samples.data();
  const std::int64_t n_in = static_cast<std::int64_t>(in_len);

  parallel_for(static_cast<std::int64_t>(out_len), [&](std::int64_t n) {
    const double center = static_cast<double>(n) / ratio;
    const std::int64_t lo = static_cast<std::int64_t>(
        std::ceil(center - half_width));
    const std::int64_t hi =
        static_cast<std::int64_t>(std::floor(center + half_width));
    double acc = 0.0;
    for (std::int64_t m = std::max<std::int64_t>(lo, 0);
         m <= std::min<std::int64_t>(hi, n_in - 1); ++m) {
      const double x = static_cast<double>(m) - center;
      const double sinc_arg = 2.0 * cutoff * x;
      double sinc = 1.0;
      if (sinc_arg != 0.0) {
        sinc = std::sin(kPi * sinc_arg) / (kPi * sinc_arg);
      }
      const double w_arg = x / half_width;
      const double window =
          bessel_i0(kBeta * std::sqrt(std::max(0.0, 1.0 - w_arg * w_arg))) /
          i0_beta;
      acc += static_cast<double>(in[m]) * 2.0 * cutoff * sinc * window;
    }
    out.samples[static_cast<std::size_t>(n)] = static_cast<float>(acc);
  });
  return out;
}

std::vector<double> rms_frames(const AudioClip& clip, std::size_t frame_len,
                               std::size_t hop_len) {
  require(clip.mono(), Errc::kPrecondition, "rms_frames expects a mono clip");
  require(frame_len >= 1 && hop_len >= 1, Errc::kPrecondition,
          "frame_len and hop_len must be >= 1");
  const std::size_t len = clip.samples.size();
  if (len == 0) return {};
  const std::size_t n_frames = (len + hop_len - 1) / hop_len;
  std::vector<double> out(n_frames);
  parallel_for(static_cast<std::int64_t>(n_frames), [&](std::int64_t k) {
    const std::size_t start = static_cast<std::size_t>(k) * hop_len;
    double acc = 0.0;
    const std::size_t end = std::min(start + frame_len, len);
    for (std::size_t i = start; i < end; ++i) {
      const double v = clip.samples[i];
      acc += v * v;
    }
    out[static_cast<std::size_t>(k)] =
        std::sqrt(acc / static_cast<double>(frame_len));
  });
  return out;
}

double peak_amplitude(const AudioClip& clip) {
  double peak = 0.0;
  for (const float v : clip.samples) {
    peak = std::max(peak, static_cast<double>(std::fabs(v)));
  }
  return peak;
}

double mean_square(std::span<const float> samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const float v : samples) {
    acc += static_cast<double>(v) * static_cast<double>(v);
  }
  return acc / static_cast<double>(samples.size());
}

double rms(const AudioClip& clip) {
  return std::sqrt(mean_square(clip.samples));
}

double normalize_peak(AudioClip& clip) {
  const double peak = peak_amplitude(clip);
  if (peak <= 1.0 || peak == 0.0) return 1.0;
  const float factor = static_cast<float>(1.0 / peak);
  for (auto& v : clip.samples) v *= factor;
  // Guard against the quotient rounding up past full scale.
  if (peak_amplitude(clip) > 1.0) {
    for (auto& v : clip.samples) v = std::clamp(v, -1.0f, 1.0f);
  }
  return 1.0 / peak;
}

}  // namespace sepbench
