//! Encoders for the three transmission schemes and the receiver-side decoders.
//!
//! * [`encode_systematic`]: the `K` source packets in order, then uniformly
//!   random binary combinations.
//! * [`encode_straightforward`]: every packet is a uniformly random binary
//!   combination.
//! * [`encode_ordered_uncoded`]: the source packets repeated cyclically.
//!
//! [`DecoderState`] is the progressive decoder: every arriving packet triggers
//! a full elimination pass over a `(K+1) × K` workspace followed by
//! back-substitution, and every row left with a single one yields a source
//! packet. [`ge_full_rank_decode`] is the classical batch decoder that only
//! reports success when the decoding matrix has rank `K`, and
//! [`rref_oracle_decodable_set`] is an independent reference used by tests.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::gf2::{xor_bytes, BitMatrix, BitVector, CodingVector, Gf2Error, DEFAULT_MAX_GENERATION};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid dimension for {what}: expected {expected}, found {found}")]
    InvalidDimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("a source message needs at least one packet")]
    EmptyMessage,
    #[error("source packets must be at least one byte long")]
    EmptyPayload,
    #[error("generation size {k} exceeds the configured maximum {max}")]
    GenerationTooLarge { k: usize, max: usize },
    #[error("sequence index must be at least 1")]
    ZeroSequenceIndex,
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

/// A message segmented into `K` equally sized source packets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceMessage {
    packets: Vec<Vec<u8>>,
    payload_len: usize,
}

impl SourceMessage {
    pub fn new(packets: Vec<Vec<u8>>) -> Result<Self, CodecError> {
        Self::with_max_generation(packets, DEFAULT_MAX_GENERATION)
    }

    pub fn with_max_generation(packets: Vec<Vec<u8>>, max_k: usize) -> Result<Self, CodecError> {
        let first = packets.first().ok_or(CodecError::EmptyMessage)?;
        if packets.len() > max_k {
            return Err(CodecError::GenerationTooLarge {
                k: packets.len(),
                max: max_k,
            });
        }
        let payload_len = first.len();
        if payload_len == 0 {
            return Err(CodecError::EmptyPayload);
        }
        if let Some(bad) = packets.iter().find(|p| p.len() != payload_len) {
            return Err(CodecError::InvalidDimension {
                what: "source payload",
                expected: payload_len,
                found: bad.len(),
            });
        }
        Ok(Self {
            packets,
            payload_len,
        })
    }

    /// `k` packets of `payload_len` random bytes.
    pub fn random<R: Rng + ?Sized>(
        k: usize,
        payload_len: usize,
        rng: &mut R,
    ) -> Result<Self, CodecError> {
        let packets = (0..k)
            .map(|_| {
                let mut p = vec![0u8; payload_len];
                rng.fill_bytes(&mut p);
                p
            })
            .collect();
        Self::new(packets)
    }

    /// Generation size `K`.
    pub fn k(&self) -> usize {
        self.packets.len()
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    /// Source packet `s_i`, 1-based.
    pub fn packet(&self, i: usize) -> Option<&[u8]> {
        i.checked_sub(1)
            .and_then(|i| self.packets.get(i))
            .map(Vec::as_slice)
    }

    pub fn packets(&self) -> &[Vec<u8>] {
        &self.packets
    }

    /// `g · s` over GF(2): the XOR of the source packets selected by `g`.
    pub fn combine(&self, g: &CodingVector) -> Result<Vec<u8>, CodecError> {
        if g.len() != self.k() {
            return Err(CodecError::InvalidDimension {
                what: "coding vector",
                expected: self.k(),
                found: g.len(),
            });
        }
        let mut out = vec![0u8; self.payload_len];
        for i in g.ones() {
            xor_bytes(&mut out, &self.packets[i - 1]);
        }
        Ok(out)
    }
}

/// A packet as it crosses the channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmittedPacket {
    pub coding_vector: CodingVector,
    pub payload: Vec<u8>,
    /// 1-based transmission slot `n`.
    pub sequence_index: usize,
}

impl TransmittedPacket {
    fn build(msg: &SourceMessage, g: CodingVector, n: usize) -> Self {
        let payload = msg.combine(&g).expect("coding vector sized from message");
        Self {
            coding_vector: g,
            payload,
            sequence_index: n,
        }
    }
}

/// Draws `k` independent uniform binary coefficients, 64 per `next_u64`.
/// Coefficient `i` is bit `(i - 1) % 64` of draw `(i - 1) / 64`.
pub fn random_coding_vector<R: Rng + ?Sized>(k: usize, rng: &mut R) -> CodingVector {
    let words = (0..k.div_ceil(64)).map(|_| rng.next_u64()).collect();
    BitVector::from_words(words, k)
}

fn unit(k: usize, i: usize) -> CodingVector {
    BitVector::unit(k, i).expect("index within generation")
}

/// The `n`-th packet of a systematic stream.
pub fn encode_systematic<R: Rng + ?Sized>(
    msg: &SourceMessage,
    n: usize,
    rng: &mut R,
) -> Result<TransmittedPacket, CodecError> {
    if n == 0 {
        return Err(CodecError::ZeroSequenceIndex);
    }
    let k = msg.k();
    let g = if n <= k {
        unit(k, n)
    } else {
        random_coding_vector(k, rng)
    };
    Ok(TransmittedPacket::build(msg, g, n))
}

/// The `n`-th packet of a straightforward (non-systematic) stream. The
/// all-zero combination is a legal draw.
pub fn encode_straightforward<R: Rng + ?Sized>(
    msg: &SourceMessage,
    n: usize,
    rng: &mut R,
) -> Result<TransmittedPacket, CodecError> {
    if n == 0 {
        return Err(CodecError::ZeroSequenceIndex);
    }
    let g = random_coding_vector(msg.k(), rng);
    Ok(TransmittedPacket::build(msg, g, n))
}

/// The `n`-th packet of ordered uncoded transmission: `t_{i+mK} = s_i`.
pub fn encode_ordered_uncoded(
    msg: &SourceMessage,
    n: usize,
) -> Result<TransmittedPacket, CodecError> {
    if n == 0 {
        return Err(CodecError::ZeroSequenceIndex);
    }
    let k = msg.k();
    let i = (n - 1) % k + 1;
    Ok(TransmittedPacket::build(msg, unit(k, i), n))
}

/// Transmission scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Systematic,
    Straightforward,
    OrderedUncoded,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [
        Scheme::Systematic,
        Scheme::Straightforward,
        Scheme::OrderedUncoded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Systematic => "systematic",
            Scheme::Straightforward => "straightforward",
            Scheme::OrderedUncoded => "ordered-uncoded",
        }
    }

    /// Stable identifier mixed into per-trial seeds.
    pub fn id(self) -> u64 {
        match self {
            Scheme::Systematic => 1,
            Scheme::Straightforward => 2,
            Scheme::OrderedUncoded => 3,
        }
    }

    /// Ordered uncoded transmission never touches `rng`.
    pub fn encode<R: Rng + ?Sized>(
        self,
        msg: &SourceMessage,
        n: usize,
        rng: &mut R,
    ) -> Result<TransmittedPacket, CodecError> {
        match self {
            Scheme::Systematic => encode_systematic(msg, n, rng),
            Scheme::Straightforward => encode_straightforward(msg, n, rng),
            Scheme::OrderedUncoded => encode_ordered_uncoded(msg, n),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "systematic" | "sys" => Ok(Scheme::Systematic),
            "straightforward" | "sf" => Ok(Scheme::Straightforward),
            "ordered-uncoded" | "ou" => Ok(Scheme::OrderedUncoded),
            other => Err(CodecError::UnknownScheme(other.to_string())),
        }
    }
}

/// A GF(2) matrix whose rows each carry a payload; every row operation is
/// mirrored on the payloads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedMatrix {
    coeffs: BitMatrix,
    payloads: Vec<Vec<u8>>,
    payload_len: usize,
}

impl AugmentedMatrix {
    pub fn new(cols: usize, payload_len: usize) -> Self {
        Self {
            coeffs: BitMatrix::zeros(0, cols),
            payloads: Vec::new(),
            payload_len,
        }
    }

    /// `rows × cols` zero matrix with zero payloads.
    pub fn zeros(rows: usize, cols: usize, payload_len: usize) -> Self {
        Self {
            coeffs: BitMatrix::zeros(rows, cols),
            payloads: vec![vec![0; payload_len]; rows],
            payload_len,
        }
    }

    pub fn from_packets(packets: &[TransmittedPacket], cols: usize) -> Result<Self, CodecError> {
        let payload_len = packets.first().map_or(0, |p| p.payload.len());
        let mut m = Self::new(cols, payload_len);
        for p in packets {
            m.push_row(&p.coding_vector, p.payload.clone())?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: &CodingVector, payload: Vec<u8>) -> Result<(), CodecError> {
        if payload.len() != self.payload_len {
            return Err(CodecError::InvalidDimension {
                what: "payload",
                expected: self.payload_len,
                found: payload.len(),
            });
        }
        self.coeffs.push_row(row)?;
        self.payloads.push(payload);
        Ok(())
    }

    pub fn row_count(&self) -> usize {
        self.coeffs.row_count()
    }

    pub fn coefficients(&self) -> &BitMatrix {
        &self.coeffs
    }

    /// Payload of 1-based row `i`.
    pub fn payload(&self, i: usize) -> Option<&[u8]> {
        i.checked_sub(1)
            .and_then(|i| self.payloads.get(i))
            .map(Vec::as_slice)
    }

    pub fn swap_rows(&mut self, i: usize, j: usize) -> Result<(), CodecError> {
        self.coeffs.swap_rows(i, j)?;
        self.payloads.swap(i - 1, j - 1);
        Ok(())
    }

    /// `row[dst] ← row[dst] ⊕ row[src]`, payload included.
    pub fn xor_row_into(&mut self, dst: usize, src: usize) -> Result<(), CodecError> {
        self.coeffs.xor_row_into(dst, src)?;
        if dst == src {
            self.payloads[dst - 1].fill(0);
        } else {
            self.xor_payload0(dst - 1, src - 1);
        }
        Ok(())
    }

    pub fn truncate(&mut self, rows: usize) {
        self.coeffs.truncate(rows);
        self.payloads.truncate(rows);
    }

    #[inline]
    fn swap0(&mut self, a: usize, b: usize) {
        self.coeffs.swap0(a, b);
        self.payloads.swap(a, b);
    }

    #[inline]
    fn xor0(&mut self, dst: usize, src: usize) {
        self.coeffs.xor0(dst, src);
        self.xor_payload0(dst, src);
    }

    #[inline]
    fn xor_payload0(&mut self, dst: usize, src: usize) {
        if dst < src {
            let (head, tail) = self.payloads.split_at_mut(src);
            xor_bytes(&mut head[dst], &tail[0]);
        } else {
            let (head, tail) = self.payloads.split_at_mut(dst);
            xor_bytes(&mut tail[0], &head[src]);
        }
    }
}

/// For `i = K` down to `1`: when row `i` has a single one at column `j`,
/// clears column `j` in every other row among the first `K`, XORing the
/// payload of row `i` into each row it clears.
pub fn back_substitution(m: &mut AugmentedMatrix, k: usize) -> Result<(), CodecError> {
    if m.coeffs.col_count() != k {
        return Err(CodecError::InvalidDimension {
            what: "matrix columns",
            expected: k,
            found: m.coeffs.col_count(),
        });
    }
    if m.row_count() > k + 1 {
        return Err(CodecError::InvalidDimension {
            what: "matrix rows (at most K+1)",
            expected: k + 1,
            found: m.row_count(),
        });
    }
    back_substitution0(m, k, &mut Vec::new());
    Ok(())
}

fn back_substitution0(m: &mut AugmentedMatrix, k: usize, targets: &mut Vec<usize>) {
    let rows = m.row_count().min(k);
    for i in (0..rows).rev() {
        if m.coeffs.degree0(i) != 1 {
            continue;
        }
        let j = m.coeffs.leftmost0(i).expect("degree one row");
        // Row i is the unit vector e_j, so clearing G[r][j] is an XOR with row i.
        m.coeffs.rows_with_bit0(j, rows, targets);
        for &r in targets.iter() {
            if r != i {
                m.xor0(r, i);
            }
        }
    }
}

/// Receiver state of the progressive decoder for one generation.
#[derive(Debug, Clone)]
pub struct DecoderState {
    k: usize,
    payload_len: usize,
    workspace: AugmentedMatrix,
    decoded: BitVector,
    decoded_count: usize,
    recovered: Vec<Option<Vec<u8>>>,
    /// Word mask of the columns holding a pivot.
    pivots: Vec<u64>,
    targets: Vec<usize>,
    /// Payload buffer of the discarded row K+1, reused for the next packet.
    spare: Option<Vec<u8>>,
}

impl DecoderState {
    /// Fresh decoder whose workspace is the `K × K` zero matrix.
    pub fn new(k: usize, payload_len: usize) -> Result<Self, CodecError> {
        Self::with_max_generation(k, payload_len, DEFAULT_MAX_GENERATION)
    }

    pub fn with_max_generation(
        k: usize,
        payload_len: usize,
        max_k: usize,
    ) -> Result<Self, CodecError> {
        if k == 0 {
            return Err(CodecError::EmptyMessage);
        }
        if k > max_k {
            return Err(CodecError::GenerationTooLarge { k, max: max_k });
        }
        if payload_len == 0 {
            return Err(CodecError::EmptyPayload);
        }
        let mut workspace = AugmentedMatrix::zeros(k, k, payload_len);
        // Room for the appended row without reallocating.
        workspace.payloads.reserve(1);
        Ok(Self {
            k,
            payload_len,
            workspace,
            decoded: BitVector::zeros(k),
            decoded_count: 0,
            recovered: vec![None; k],
            pivots: vec![0; k.div_ceil(64)],
            targets: Vec::with_capacity(k + 1),
            spare: None,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn workspace(&self) -> &AugmentedMatrix {
        &self.workspace
    }

    pub fn decoded_count(&self) -> usize {
        self.decoded_count
    }

    pub fn is_complete(&self) -> bool {
        self.decoded_count == self.k
    }

    /// 1-based indices of every source packet recovered so far.
    pub fn decoded_indices(&self) -> BTreeSet<usize> {
        self.decoded.ones().collect()
    }

    pub fn decoded_mask(&self) -> &BitVector {
        &self.decoded
    }

    /// Recovered payload of source packet `i`, 1-based.
    pub fn recovered(&self, i: usize) -> Option<&[u8]> {
        i.checked_sub(1)
            .and_then(|i| self.recovered.get(i))
            .and_then(|p| p.as_deref())
    }

    /// Feeds one packet through the decoder and returns the 1-based indices
    /// of the source packets it made decodable, ascending.
    pub fn receive(&mut self, pkt: &TransmittedPacket) -> Result<Vec<usize>, CodecError> {
        if pkt.coding_vector.len() != self.k {
            return Err(CodecError::InvalidDimension {
                what: "coding vector",
                expected: self.k,
                found: pkt.coding_vector.len(),
            });
        }
        if pkt.payload.len() != self.payload_len {
            return Err(CodecError::InvalidDimension {
                what: "payload",
                expected: self.payload_len,
                found: pkt.payload.len(),
            });
        }

        let k = self.k;
        let g = &mut self.workspace;
        let mut payload = self.spare.take().unwrap_or_default();
        payload.clear();
        payload.extend_from_slice(&pkt.payload);
        g.coeffs.push_row(&pkt.coding_vector)?;
        g.payloads.push(payload);
        // Remove already decoded packets from the incoming combination (R).
        if self.decoded_count > 0 {
            let row = g.coeffs.row_words_mut(k);
            for (w, (x, m)) in row.iter_mut().zip(self.decoded.words()).enumerate() {
                let mut hit = *x & m;
                *x &= !m;
                while hit != 0 {
                    let i = w * 64 + hit.trailing_zeros() as usize;
                    hit &= hit - 1;
                    let s = self.recovered[i].as_deref().expect("decoded payload");
                    xor_bytes(&mut g.payloads[k], s);
                }
            }
        }
        if g.coeffs.degree0(k) == 0 {
            self.spare = g.payloads.pop();
            g.coeffs.truncate(k);
            return Ok(Vec::new());
        }

        // Between calls the workspace is in reduced echelon form with every
        // pivot on the diagonal. The column sweep of the pass then only acts
        // in two places, and these are the row operations performed here; all
        // other iterations of the sweep leave the matrix unchanged.
        //
        // 1. Columns before R's first non-pivot one: R is the only row with a
        //    one in a pivot column, so it is XORed with that pivot row.
        let mut new_pivot = None;
        while let Some(l) = g.coeffs.leftmost0(k) {
            if g.coeffs.bit(l, l) {
                g.xor0(k, l);
            } else {
                new_pivot = Some(l);
                break;
            }
        }
        // 2. At that column c, R is the only row whose leftmost one is c: it
        //    moves to row c and clears column c from the rows above it (rows
        //    below c start beyond c). Those rows may then hold ones in later
        //    pivot columns, which the remaining sweep clears. Pivot rows never
        //    change, so clearing row by row equals clearing column by column.
        if let Some(c) = new_pivot {
            g.swap0(c, k);
            self.pivots[c / 64] |= 1 << (c % 64);
            g.coeffs.rows_with_bit0(c, c, &mut self.targets);
            for &j in &self.targets {
                g.xor0(j, c);
            }
            self.targets.push(c);
            for &d in &self.targets {
                while let Some(i) = g.coeffs.first_masked_after0(d, &self.pivots, c) {
                    g.xor0(d, i);
                }
            }
        }
        // Back substitution clears column j around each degree-one row e_j;
        // in the reduced form every such column is already clear, so it is
        // skipped. The unit tests check this against the literal pass.
        debug_assert_eq!(g.coeffs.degree0(k), 0, "row K+1 must be eliminated");
        self.spare = g.payloads.pop();
        g.coeffs.truncate(k);

        let mut newly = Vec::new();
        for row in 0..k {
            if g.coeffs.degree0(row) != 1 {
                continue;
            }
            let j = g.coeffs.leftmost0(row).expect("degree one row");
            if self.recovered[j].is_none() {
                self.recovered[j] = Some(g.payloads[row].clone());
                self.decoded.set(j + 1, true)?;
                self.decoded_count += 1;
                newly.push(j + 1);
            }
        }
        newly.sort_unstable();
        Ok(newly)
    }
}

/// Outcome of the all-or-nothing batch decoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeOutcome {
    /// Source payloads `s_1 … s_K` in order.
    Recovered(Vec<Vec<u8>>),
    RankDeficient {
        rank: usize,
    },
}

impl GeOutcome {
    pub fn is_recovered(&self) -> bool {
        matches!(self, GeOutcome::Recovered(_))
    }
}

/// Batch Gaussian elimination on the augmented decoding matrix: forward
/// elimination to row-echelon form, then back substitution when the rank is
/// `K`. Recovers nothing at all when the matrix is rank deficient.
pub fn ge_full_rank_decode(rows: &[TransmittedPacket], k: usize) -> Result<GeOutcome, CodecError> {
    if let Some(bad) = rows.iter().find(|p| p.coding_vector.len() != k) {
        return Err(CodecError::InvalidDimension {
            what: "coding vector",
            expected: k,
            found: bad.coding_vector.len(),
        });
    }
    if rows.len() < k {
        let rank = rank_of(
            &rows
                .iter()
                .map(|p| p.coding_vector.clone())
                .collect::<Vec<_>>(),
            k,
        );
        return Ok(GeOutcome::RankDeficient { rank });
    }
    let mut m = AugmentedMatrix::from_packets(rows, k)?;
    let n = m.row_count();
    let mut rank = 0;
    for col in 0..k {
        let Some(p) = (rank..n).find(|&r| m.coeffs.bit(r, col)) else {
            continue;
        };
        m.swap0(rank, p);
        for r in rank + 1..n {
            if m.coeffs.bit(r, col) {
                m.xor0(r, rank);
            }
        }
        rank += 1;
    }
    if rank < k {
        return Ok(GeOutcome::RankDeficient { rank });
    }
    // Full rank: row c holds the pivot of column c.
    for col in (0..k).rev() {
        for r in 0..col {
            if m.coeffs.bit(r, col) {
                m.xor0(r, col);
            }
        }
    }
    m.truncate(k);
    Ok(GeOutcome::Recovered(m.payloads))
}

fn rank_of(rows: &[CodingVector], k: usize) -> usize {
    let mut m = BitMatrix::from_rows(rows, k).expect("rows sized to k");
    let n = m.row_count();
    let mut rank = 0;
    for col in 0..k {
        if let Some(p) = (rank..n).find(|&r| m.bit(r, col)) {
            m.swap0(rank, p);
            for r in rank + 1..n {
                if m.bit(r, col) {
                    m.xor0(r, rank);
                }
            }
            rank += 1;
        }
    }
    rank
}

/// Reference decodability: the set of `i` with `e_i` in the row space of
/// `rows`. Computed on an unpacked one-coefficient-per-element copy, by
/// reduced row-echelon form; `e_i` lies in the row space exactly when some
/// reduced row equals `e_i`.
pub fn rref_oracle_decodable_set(rows: &[CodingVector], k: usize) -> BTreeSet<usize> {
    let mut m: Vec<Vec<bool>> = rows
        .iter()
        .map(|r| {
            let mut b = r.to_bools();
            b.resize(k, false);
            b
        })
        .collect();
    let mut pivot_row = 0;
    for col in 0..k {
        let Some(p) = (pivot_row..m.len()).find(|&r| m[r][col]) else {
            continue;
        };
        m.swap(pivot_row, p);
        let pivot = m[pivot_row].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != pivot_row && row[col] {
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x ^= y;
                }
            }
        }
        pivot_row += 1;
    }
    m.iter()
        .filter(|row| row.iter().filter(|b| **b).count() == 1)
        .map(|row| row.iter().position(|b| *b).unwrap() + 1)
        .collect()
}
