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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>

#include "sepbench/audio.hpp"
#include "sepbench/errors.hpp"
#include "testutil.hpp"

using namespace sepbench;
using namespace sepbench::test;

TEST_CASE("read_wav: zeros round through pcm16") {
  TempDir dir("wav_zero");
  write_wav(constant(0.0f, 1.0, 44100), dir.str("z.wav"), WavEncoding::kPcm16);
  const AudioClip clip = read_wav(dir.str("z.wav"));
  CHECK(clip.sample_rate == 44100);
  CHECK(clip.channels == 1);
  CHECK(clip.samples.size() == 44100);
  for (const float s : clip.samples) CHECK(s == 0.0f);
}

TEST_CASE("read_wav: pcm16 full-scale integer scaling") {
  // Hand-build a one-sample PCM-16 file holding 32767.
  TempDir dir("wav_fs");
  const std::string path = dir.str("fs.wav");
  {
    AudioClip clip = make_mono({1.0f}, 8000);
    write_wav(clip, path, WavEncoding::kPcm16);  // 1.0 clamps to 32767
  }
  const AudioClip clip = read_wav(path);
  CHECK(clip.samples.size() == 1);
  CHECK(clip.samples[0] == doctest::Approx(32767.0 / 32768.0).epsilon(1e-9));
}

TEST_CASE("read_wav: RIFX magic is a format error") {
  TempDir dir("wav_rifx");
  const std::string path = dir.str("bad.wav");
  write_wav(constant(0.1f, 0.1, 8000), path, WavEncoding::kPcm16);
  // Flip the container magic.
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.write("RIFX", 4);
  f.close();
  CHECK_THROWS_AS(read_wav(path), Error);
  try {
    read_wav(path);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kFormat);
  }
}

TEST_CASE("read_wav: unsupported encoding reported as such") {
  TempDir dir("wav_codec");
  const std::string path = dir.str("alaw.wav");
  write_wav(constant(0.1f, 0.1, 8000), path, WavEncoding::kPcm16);
  // Patch the fmt tag (offset 20) to 6 = A-law.
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(20);
  const char alaw[2] = {6, 0};
  f.write(alaw, 2);
  f.close();
  try {
    read_wav(path);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kUnsupportedCodec);
  }
}

TEST_CASE("write_wav: float32 round-trip is bit exact") {
  TempDir dir("wav_f32");
  const AudioClip clip = white_noise(0.25, 22050, 0.8, 7);
  write_wav(clip, dir.str("x.wav"), WavEncoding::kFloat32);
  const AudioClip back = read_wav(dir.str("x.wav"));
  REQUIRE(back.samples.size() == clip.samples.size());
  CHECK(std::memcmp(back.samples.data(), clip.samples.data(),
                    clip.samples.size() * sizeof(float)) == 0);
  CHECK(back.sample_rate == clip.sample_rate);
}

TEST_CASE("write_wav: pcm16 quantization within one LSB") {
  TempDir dir("wav_q");
  const AudioClip clip = make_mono({0.5f}, 8000);
  write_wav(clip, dir.str("h.wav"), WavEncoding::kPcm16);
  const AudioClip back = read_wav(dir.str("h.wav"));
  CHECK(std::fabs(back.samples[0] - 0.5) <= std::pow(2.0, -15));
}

TEST_CASE("write_wav: empty clip is a precondition error") {
  TempDir dir("wav_empty");
  AudioClip clip;
  clip.sample_rate = 8000;
  try {
    write_wav(clip, dir.str("e.wav"));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kPrecondition);
  }
}

TEST_CASE("write_wav: unwritable path is an io error") {
  const AudioClip clip = constant(0.1f, 0.1, 8000);
  try {
    write_wav(clip, "/nonexistent_dir_hopefully/x.wav");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kIo);
    CHECK(e.is_io());
  }
}

TEST_CASE("round-trip property: 1000 random clips") {
  TempDir dir("wav_prop");
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(64);
    std::vector<float> samples(n);
    for (auto& s : samples) {
      s = static_cast<float>(2.0 * rng.uniform() - 1.0);
    }
    const AudioClip clip = make_mono(std::move(samples), 16000);

    const std::string f32 = dir.str("p32.wav");
    write_wav(clip, f32, WavEncoding::kFloat32);
    const AudioClip back32 = read_wav(f32);
    REQUIRE(back32.samples.size() == clip.samples.size());
    CHECK(std::memcmp(back32.samples.data(), clip.samples.data(),
                      clip.samples.size() * sizeof(float)) == 0);

    const std::string p16 = dir.str("p16.wav");
    write_wav(clip, p16, WavEncoding::kPcm16);
    const AudioClip back16 = read_wav(p16);
    CHECK(max_abs_diff(back16.samples, clip.samples) <= std::pow(2.0, -15));
  }
}

TEST_CASE("stereo wav reads planar and downmixes by the mean") {
  TempDir dir("wav_st");
  AudioClip stereo;
  stereo.sample_rate = 8000;
  stereo.channels = 2;
  stereo.samples = {0.2f, 0.2f, -0.3f, /* right: */ 0.6f, -0.2f, -0.3f};
  write_wav(stereo, dir.str("s.wav"), WavEncoding::kFloat32);
  const AudioClip back = read_wav(dir.str("s.wav"));
  CHECK(back.channels == 2);
  CHECK(back.frames() == 3);
  const AudioClip mono = downmix_mono(back);
  CHECK(mono.samples[0] == doctest::Approx(0.4).epsilon(1e-7));
  CHECK(mono.samples[1] == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(mono.samples[2] == doctest::Approx(-0.3).epsilon(1e-7));
}

TEST_CASE("downmix_mono: mono is returned unchanged") {
  const AudioClip clip = sine(200.0, 0.1, 8000);
  const AudioClip out = downmix_mono(clip);
  CHECK(out.samples == clip.samples);
}

TEST_CASE("pcm24 payload decodes with 2^23 scaling") {
  // Hand-assembled 24-bit file: one sample of exactly half scale.
  TempDir dir("wav_24");
  const std::string path = dir.str("x24.wav");
  std::ofstream out(path, std::ios::binary);
  auto u32 = [&](std::uint32_t v) {
    out.put(static_cast<char>(v & 0xFF));
    out.put(static_cast<char>((v >> 8) & 0xFF));
    out.put(static_cast<char>((v >> 16) & 0xFF));
    out.put(static_cast<char>((v >> 24) & 0xFF));
  };
  auto u16 = [&](std::uint16_t v) {
    out.put(static_cast<char>(v & 0xFF));
    out.put(static_cast<char>((v >> 8) & 0xFF));
  };
  out.write("RIFF", 4);
  u32(36 + 4);  // pad-aligned data
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  u32(16);
  u16(1);      // PCM
  u16(1);      // mono
  u32(48000);  // rate
  u32(48000 * 3);
  u16(3);
  u16(24);
  out.write("data", 4);
  u32(3);
  // 0x400000 = 2^22 -> 0.5
  out.put(0x00);
  out.put(0x00);
  out.put(0x40);
  out.put(0x00);  // pad byte
  out.close();

  const AudioClip clip = read_wav(path);
  REQUIRE(clip.samples.size() == 1);
  CHECK(clip.samples[0] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("resample: identity at equal rates") {
  const AudioClip clip = sine(440.0, 0.2, 44100);
  const AudioClip out = resample(clip, 44100);
  CHECK(out.samples == clip.samples);
}

TEST_CASE("resample: 1 kHz sine to half rate within 1% rms") {
  const int src_rate = 44100;
  const int dst_rate = 22050;
  const AudioClip clip = sine(1000.0, 1.0, src_rate, 0.5);
  const AudioClip out = resample(clip, dst_rate);
  REQUIRE(out.samples.size() == 22050);

  // Compare against the analytically generated target-rate sine over the
  // interior (kernel truncation distorts the first/last few ms).
  const AudioClip target = sine(1000.0, 1.0, dst_rate, 0.5);
  const std::size_t guard = 256;
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t i = guard; i + guard < out.samples.size(); ++i) {
    const double d = static_cast<double>(out.samples[i]) - target.samples[i];
    err += d * d;
    ref += static_cast<double>(target.samples[i]) * target.samples[i];
  }
  CHECK(std::sqrt(err / ref) <= 0.01);
}

TEST_CASE("resample: tone near the passband edge survives") {
  const int src_rate = 44100;
  const int dst_rate = 22050;
  // 0.45 * min(rates) = 9922.5 Hz.
  const AudioClip clip = sine(9900.0, 1.0, src_rate, 0.5);
  const AudioClip out = resample(clip, dst_rate);
  const AudioClip target = sine(9900.0, 1.0, dst_rate, 0.5);
  const std::size_t guard = 512;
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t i = guard; i + guard < out.samples.size(); ++i) {
    const double d = static_cast<double>(out.samples[i]) - target.samples[i];
    err += d * d;
    ref += static_cast<double>(target.samples[i]) * target.samples[i];
  }
  CHECK(std::sqrt(err / ref) <= 0.01);
}

TEST_CASE("resample: length law 44.1k -> 48k") {
  const AudioClip clip = white_noise(10.0, 44100, 0.3, 11);
  const AudioClip out = resample(clip, 48000);
  CHECK(out.samples.size() == 480000);
}

TEST_CASE("resample: norm stability within 2% for band-limited input") {
  for (const int dst : {48000, 22050, 32000}) {
    const AudioClip clip = sine(2000.0, 0.5, 44100, 0.4);
    const AudioClip out = resample(clip, dst);
    CHECK(rms(out) == doctest::Approx(rms(clip)).epsilon(0.02));
  }
}

TEST_CASE("rms_frames: zeros, constants, sine closed form") {
  const int rate = 16000;
  CHECK(rms_frames(make_mono({}, rate), 256, 128).empty());

  const auto zeros = rms_frames(constant(0.0f, 0.5, rate), 256, 128);
  for (const double v : zeros) CHECK(v == 0.0);

  const auto halves = rms_frames(constant(0.5f, 0.5, rate), 256, 256);
  // Every full frame is exactly 0.5; the final frame may be partial.
  for (std::size_t i = 0; i + 1 < halves.size(); ++i) {
    CHECK(halves[i] == doctest::Approx(0.5).epsilon(1e-12));
  }

  // Full-scale sine spanning whole frames: rms = 1/sqrt(2).
  const AudioClip tone = sine(100.0, 1.0, rate, 1.0);  // 160 samples/period
  const auto values = rms_frames(tone, 160, 160);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    CHECK(values[i] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
  }
}

TEST_CASE("rms_frames: frame count law and concatenation property") {
  const int rate = 8000;
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(4000);
    AudioClip clip = white_noise(static_cast<double>(n) / rate, rate, 0.5,
                                 100 + trial);
    clip.samples.resize(n);
    const std::size_t hop = 1 + rng.below(256);
    const auto frames = rms_frames(clip, hop, hop);
    CHECK(frames.size() == (n + hop - 1) / hop);
  }

  // Concatenation with hop == frame_len equals per-segment concatenation
  // when segment lengths are frame-aligned.
  const std::size_t frame = 128;
  AudioClip a = white_noise(0.2, rate, 0.5, 41);
  a.samples.resize(5 * frame);
  AudioClip b = white_noise(0.2, rate, 0.4, 42);
  b.samples.resize(3 * frame);
  AudioClip ab = a;
  ab.samples.insert(ab.samples.end(), b.samples.begin(), b.samples.end());
  const auto ra = rms_frames(a, frame, frame);
  const auto rb = rms_frames(b, frame, frame);
  const auto rab = rms_frames(ab, frame, frame);
  REQUIRE(rab.size() == ra.size() + rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(rab[i] == ra[i]);
  for (std::size_t i = 0; i < rb.size(); ++i) CHECK(rab[ra.size() + i] == rb[i]);
}

TEST_CASE("normalize_peak bounds the amplitude") {
  AudioClip clip = make_mono({0.5f, -2.0f, 1.5f}, 8000);
  const double factor = normalize_peak(clip);
  CHECK(factor == doctest::Approx(0.5));
  CHECK(peak_amplitude(clip) <= 1.0);

  AudioClip quiet = make_mono({0.25f, -0.5f}, 8000);
  CHECK(normalize_peak(quiet) == 1.0);
  CHECK(quiet.samples[1] == -0.5f);
}
