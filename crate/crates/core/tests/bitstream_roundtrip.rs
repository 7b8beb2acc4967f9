mod oracle;

use lfsc::bitstream::{pack, payload_len, read_header, unpack, StreamParams};
use lfsc::{CodeSequence, Error, FsqSpec};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = FsqSpec> {
    (1usize..=12, prop::collection::vec(2u32..=256, 1..=4))
        .prop_filter("codes in [4, 65536]", |(_, l)| {
            let p: u64 = l.iter().map(|&v| v as u64).product();
            (4..=65536).contains(&p)
        })
        .prop_map(|(cb, l)| FsqSpec::new(cb, l).unwrap())
}

fn case_strategy() -> impl Strategy<Value = (CodeSequence, StreamParams)> {
    (spec_strategy(), 0usize..40, 1u16..2048, any::<u64>()).prop_flat_map(|(spec, frames, stride, s)| {
        let n = frames * spec.num_codebooks();
        let max = spec.codes_per_codebook() as u32;
        prop::collection::vec(0..max, n).prop_map(move |codes| {
            let f = frames as u64;
            let original_length = if f == 0 { 0 } else { (f - 1) * stride as u64 + 1 + s % stride as u64 };
            (
                CodeSequence::new(spec.clone(), codes).unwrap(),
                StreamParams { sample_rate: 22050, total_stride: stride, original_length },
            )
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pack_unpack_is_lossless((codes, params) in case_strategy()) {
        let bytes = pack(&codes, params).unwrap();
        let (header, back) = unpack(&bytes).unwrap();
        prop_assert_eq!(&back, &codes);
        prop_assert_eq!(header.original_length, params.original_length);
        let hlen = header.encoded_len();
        let expect = (codes.num_tokens() as u64 * codes.spec().code_bit_width() as u64).div_ceil(8) as usize;
        prop_assert_eq!(bytes.len() - hlen, expect);
        prop_assert_eq!(payload_len(codes.num_frames() as u64, codes.spec()), expect);
        let fields = oracle::read_bit_fields(&bytes[hlen..], codes.spec().code_bit_width(), codes.num_tokens());
        prop_assert_eq!(&fields[..], codes.codes());
        prop_assert_eq!(header.to_bytes(), bytes[..hlen].to_vec());
    }
}

#[test]
fn flipped_bit_past_code_range_is_corruption() {
    let spec = FsqSpec::lfsc_default();
    let codes = CodeSequence::new(spec, (0..22 * 8).map(|i| 2015 - (i % 3)).collect()).unwrap();
    let params = StreamParams { sample_rate: 22050, total_stride: 1024, original_length: 22050 };
    let bytes = pack(&codes, params).unwrap();
    let (_, hlen) = read_header(&bytes).unwrap();
    assert_eq!(bytes.len() - hlen, 242);
    // field 5 (bits 55..66) holds 2013 = 0b111_1101_1101; bit 5 of it is bit 60
    let mut bad = bytes.clone();
    bad[hlen + 60 / 8] |= 1 << (7 - 60 % 8);
    assert_eq!(oracle::read_bit_fields(&bad[hlen..], 11, 6)[5], 2045);
    assert!(matches!(unpack(&bad), Err(Error::Corrupt(_))));
}

#[test]
fn header_only_stream() {
    let codes = CodeSequence::empty(FsqSpec::codes_4032());
    let bytes = pack(&codes, StreamParams { sample_rate: 22050, total_stride: 1024, original_length: 0 }).unwrap();
    let (h, back) = unpack(&bytes).unwrap();
    assert_eq!(h.num_frames, 0);
    assert_eq!(bytes.len(), h.encoded_len());
    assert_eq!(back.num_frames(), 0);
}
