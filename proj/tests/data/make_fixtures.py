"""Regenerates the WAV fixtures with an encoder independent of prosodykit."""
import numpy as np
from scipy.io import wavfile

sr = 16000
t = np.arange(sr) / sr
x = np.round(0.5 * np.sin(2 * np.pi * 440 * t) * 32767).astype(np.int16)
wavfile.write("sine440_pcm16.wav", sr, x)
np.savetxt("sine440_pcm16.txt", x[:64], fmt="%d")

n = 800
left = np.linspace(-0.5, 0.5, n, dtype=np.float32)
right = np.full(n, 0.25, dtype=np.float32)
right[10] = 1.5
wavfile.write("stereo_float32.wav", 22050, np.stack([left, right], axis=1))

wavfile.write("pcm8.wav", 8000, (np.arange(100) % 255).astype(np.uint8))
wavfile.write("pcm32.wav", 8000, (np.arange(100) * 1000).astype(np.int32))
