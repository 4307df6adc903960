#!/usr/bin/env python3
"""Regenerates tests/fixtures/envi.

Valid fixtures hold the logical 2-line x 4-sample x 3-band cube
v(l, s, b) = 1 + 100*l + 10*s + b in various encodings. Files named
error_<Code>_*.hdr must fail with that error code, either while parsing
the header or while decoding the data file next to it.
"""
import pathlib
import struct
import sys

LINES, SAMPLES, BANDS = 2, 4, 3


def value(l, s, b):
    return 1 + 100 * l + 10 * s + b


def order(interleave):
    if interleave == "bsq":
        return [(l, s, b) for b in range(BANDS) for l in range(LINES) for s in range(SAMPLES)]
    if interleave == "bil":
        return [(l, s, b) for l in range(LINES) for b in range(BANDS) for s in range(SAMPLES)]
    return [(l, s, b) for l in range(LINES) for s in range(SAMPLES) for b in range(BANDS)]


def raw(interleave, fmt, big=False):
    prefix = ">" if big else "<"
    return b"".join(struct.pack(prefix + fmt, value(*i)) for i in order(interleave))


def header(interleave, dtype, byte_order=0, extra=""):
    return (f"ENVI\nsamples = {SAMPLES}\nlines = {LINES}\nbands = {BANDS}\n"
            f"interleave = {interleave}\ndata type = {dtype}\nbyte order = {byte_order}\n{extra}")


def main(out):
    out.mkdir(parents=True, exist_ok=True)
    files = {}

    def put(name, text, data=None, ext=".raw"):
        files[name + ".hdr"] = text.encode()
        if data is not None:
            files[name + ext] = data

    for il in ("bsq", "bil", "bip"):
        put(f"valid_{il}_float32", header(il, 4), raw(il, "f"))
    put("valid_bsq_float32_big", header("bsq", 4, 1), raw("bsq", "f", big=True))
    put("valid_bil_float64", header("bil", 5), raw("bil", "d"))
    put("valid_bip_float64_big", header("bip", 5, 1), raw("bip", "d", big=True))
    put("valid_bsq_uint16_scaled", header("bsq", 12, extra="reflectance scale factor = 4095\n"), raw("bsq", "H"))
    put("valid_bip_uint16_big", header("bip", 12, 1), raw("bip", "H", big=True))
    put("valid_multiline_wavelengths",
        header("bip", 4, extra="wavelength = {\n  400.0,\n  500.0,\n  600.0 }\nwavelength units = Nanometers\n"),
        raw("bip", "f"))
    put("valid_micrometers", header("bsq", 4, extra="wavelength units = Micrometers\nwavelength = {0.4, 0.5, 0.6}\n"),
        raw("bsq", "f"))
    put("valid_mixed_case_keys",
        f"ENVI\r\n  SAMPLES=  {SAMPLES}\r\nLines   = {LINES}\r\nBands = {BANDS}\r\nInterleave = BIL\r\n"
        "Data Type = 4\r\nBYTE ORDER = 0\r\n", raw("bil", "f"))
    put("valid_unknown_keys",
        header("bsq", 4, extra="description = {Fixture with\n  keys the reader does not interpret}\n"
                               "sensor type = Unknown\nfwhm = {10, 10, 10}\n"),
        raw("bsq", "f"))
    put("valid_header_offset", header("bip", 4, extra="header offset = 16\n"), b"\xAB" * 16 + raw("bip", "f"))
    put("valid_img_extension", header("bsq", 4), raw("bsq", "f"), ext=".img")

    put("error_MissingMagic_absent", "samples = 4\nlines = 2\nbands = 3\ninterleave = bsq\ndata type = 4\n")
    put("error_MissingMagic_lowercase", header("bsq", 4).replace("ENVI", "envi", 1))
    put("error_MissingMagic_glued", header("bsq", 4).replace("ENVI\n", "ENVIsamples = 4\n", 1))
    put("error_MissingRequiredKey_samples", header("bsq", 4).replace(f"samples = {SAMPLES}\n", ""))
    put("error_MissingRequiredKey_interleave", header("bsq", 4).replace("interleave = bsq\n", ""))
    put("error_MissingRequiredKey_data_type", header("bsq", 4).replace("data type = 4\n", ""))
    put("error_MalformedList_unterminated", header("bsq", 4, extra="wavelength = {400, 500,\n600\n"))
    put("error_MalformedList_nested", header("bsq", 4, extra="wavelength = {400, {500}, 600}\n"))
    put("error_MalformedList_stray_close", header("bsq", 4, extra="400, 500 }\n"))
    put("error_LengthMismatch_short", header("bsq", 4, extra="wavelength = {400, 500}\n"))
    put("error_LengthMismatch_long", header("bsq", 4, extra="wavelength = {400, 500, 600, 700}\n"))
    put("error_NonMonotoneWavelengths", header("bsq", 4, extra="wavelength = {400, 600, 500}\n"))
    put("error_UnsupportedDataType_unknown_code", header("bsq", 7))
    put("error_UnsupportedDataType_complex", header("bsq", 6), raw("bsq", "f") * 2)
    put("error_SizeMismatch_short", header("bsq", 4), raw("bsq", "f")[:-1])

    for name, data in files.items():
        (out / name).write_bytes(data)
    print(f"wrote {len(files)} files to {out}")


if __name__ == "__main__":
    main(pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path(__file__).parents[1] / "tests/fixtures/envi")
