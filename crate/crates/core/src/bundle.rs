//! Binary model bundle: a fitted pipeline plus provenance.
//!
//! ```text
//! magic "TXCNTBDL" | u16 major | u16 minor | section*
//! section = tag [4] | u64 length | payload
//! ```
//!
//! Sections are `FEAT` (featurizer), one `MODL` per target in target order,
//! an optional `A11S` (age-11 stage) and `PROV` (provenance). All integers
//! and floats are little-endian. Weight vectors are stored sparse when fewer
//! than a quarter of the entries are non-zero. Readers refuse a different
//! major version and skip sections they do not know.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::featurizer::{AuxLayout, FeatureKey, FeaturizerConfig, FeaturizerModel, GramKind};
use crate::fsutil::{atomic_write, read_file};
use crate::pipeline::{A11Stage, Pipeline};
use crate::regressors::{LinearFamily, LinearModel, TargetModel, TargetTransform, ZeroInflatedModel};

pub const MAGIC: &[u8; 8] = b"TXCNTBDL";
pub const FORMAT_MAJOR: u16 = 1;
pub const FORMAT_MINOR: u16 = 0;

const TAG_FEAT: &[u8; 4] = b"FEAT";
const TAG_MODL: &[u8; 4] = b"MODL";
const TAG_A11S: &[u8; 4] = b"A11S";
const TAG_PROV: &[u8; 4] = b"PROV";

/// Where a bundle came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    /// The resolved run configuration, as `key = value` text.
    pub config: String,
    pub seed: u64,
    pub rows: u64,
    /// SHA-256 of the training file, lowercase hex.
    pub corpus_sha256: String,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub pipeline: Pipeline,
    pub provenance: Provenance,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.buf.extend_from_slice(s.as_bytes());
    }
    fn section(&mut self, tag: &[u8; 4], payload: Writer) {
        self.buf.extend_from_slice(tag);
        self.u64(payload.buf.len() as u64);
        self.buf.extend_from_slice(&payload.buf);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn truncated() -> Error {
    Error::Format("unexpected end of data".into())
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(truncated)?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("length overflows usize".into()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn str(&mut self) -> Result<String> {
        let n = self.usize()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("string is not UTF-8".into()))
    }
    /// A count whose items occupy at least `min_item` bytes each.
    fn count(&mut self, min_item: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(min_item) > self.buf.len() - self.pos {
            return Err(truncated());
        }
        Ok(n)
    }
    fn done(&self) -> Result<()> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(Error::Format(format!("{} trailing bytes in section", self.buf.len() - self.pos)))
        }
    }
}

fn write_featurizer(w: &mut Writer, f: &FeaturizerModel) {
    let c = f.config();
    w.u32(c.c_ngmax as u32);
    w.u32(c.w_ngmax as u32);
    w.u64(c.min_df as u64);
    w.str(c.lowercase.as_str());
    w.f64(c.ctrl_weight);
    w.f64(c.a11_weight);
    w.u64(f.n_docs() as u64);
    let aux = f.aux_layout();
    w.u32(aux.n_classes);
    w.u8(u8::from(aux.a11));
    w.u64(f.vocab_len() as u64);
    for (key, &df) in f.keys().zip(f.df()) {
        w.u8(match key.kind {
            GramKind::Word => 0,
            GramKind::Char => 1,
        });
        w.u32(key.order as u32);
        w.str(&key.gram);
        w.u32(df);
    }
}

fn read_featurizer(r: &mut Reader) -> Result<FeaturizerModel> {
    let config = FeaturizerConfig {
        c_ngmax: r.u32()? as usize,
        w_ngmax: r.u32()? as usize,
        min_df: r.usize()?,
        lowercase: r.str()?.parse().map_err(|e: Error| Error::Format(e.to_string()))?,
        ctrl_weight: r.f64()?,
        a11_weight: r.f64()?,
    };
    let n_docs = r.usize()?;
    let aux = AuxLayout {
        n_classes: r.u32()?,
        a11: r.u8()? != 0,
    };
    let n = r.count(17)?;
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let kind = match r.u8()? {
            0 => GramKind::Word,
            1 => GramKind::Char,
            k => return Err(Error::Format(format!("unknown gram kind {k}"))),
        };
        let order = r.u32()? as usize;
        let gram = r.str()?;
        records.push((FeatureKey { kind, order, gram }, r.u32()?));
    }
    FeaturizerModel::from_parts(config, records, n_docs, aux).map_err(|e| match e {
        Error::Config(m) => Error::Format(m),
        other => other,
    })
}

fn family_code(f: LinearFamily) -> u8 {
    match f {
        LinearFamily::Ridge => 0,
        LinearFamily::Poisson => 1,
        LinearFamily::Svr => 2,
        LinearFamily::Logistic => 3,
    }
}

fn write_weights(w: &mut Writer, v: &[f64]) {
    // bit test keeps -0.0 out of the implicit zeros
    let nonzero: Vec<usize> = (0..v.len()).filter(|&i| v[i].to_bits() != 0).collect();
    w.u64(v.len() as u64);
    if nonzero.len() * 4 < v.len() {
        w.u8(1);
        w.u64(nonzero.len() as u64);
        for i in nonzero {
            w.u64(i as u64);
            w.f64(v[i]);
        }
    } else {
        w.u8(0);
        v.iter().for_each(|&x| w.f64(x));
    }
}

fn read_weights(r: &mut Reader) -> Result<Vec<f64>> {
    let len = r.usize()?;
    match r.u8()? {
        0 => {
            if len.saturating_mul(8) > r.buf.len() - r.pos {
                return Err(truncated());
            }
            (0..len).map(|_| r.f64()).collect()
        }
        1 => {
            let nnz = r.count(16)?;
            let mut v = vec![0.0; len];
            let mut last = None;
            for _ in 0..nnz {
                let i = r.usize()?;
                if i >= len || last.is_some_and(|l| l >= i) {
                    return Err(Error::Format("sparse weight indices out of order or range".into()));
                }
                v[i] = r.f64()?;
                last = Some(i);
            }
            Ok(v)
        }
        e => Err(Error::Format(format!("unknown weight encoding {e}"))),
    }
}

fn write_linear(w: &mut Writer, m: &LinearModel) {
    w.u8(family_code(m.family));
    match m.transform {
        TargetTransform::LogShift(c) => {
            w.u8(0);
            w.f64(c);
        }
        TargetTransform::Identity => w.u8(1),
    }
    w.f64(m.intercept);
    w.f64(m.alpha);
    write_weights(w, &m.weights);
}

fn read_linear(r: &mut Reader) -> Result<LinearModel> {
    let family = match r.u8()? {
        0 => LinearFamily::Ridge,
        1 => LinearFamily::Poisson,
        2 => LinearFamily::Svr,
        3 => LinearFamily::Logistic,
        f => return Err(Error::Format(format!("unknown model family code {f}"))),
    };
    let transform = match r.u8()? {
        0 => TargetTransform::LogShift(r.f64()?),
        1 => TargetTransform::Identity,
        t => return Err(Error::Format(format!("unknown target transform code {t}"))),
    };
    Ok(LinearModel {
        family,
        transform,
        intercept: r.f64()?,
        alpha: r.f64()?,
        weights: read_weights(r)?,
    })
}

fn write_target_model(w: &mut Writer, name: &str, m: &TargetModel) {
    w.str(name);
    match m {
        TargetModel::Linear(m) => {
            w.u8(0);
            write_linear(w, m);
        }
        TargetModel::ZeroInflated(z) => {
            w.u8(1);
            w.f64(z.threshold);
            write_linear(w, &z.gate);
            write_linear(w, &z.counter);
        }
    }
}

fn read_target_model(r: &mut Reader) -> Result<(String, TargetModel)> {
    let name = r.str()?;
    let model = match r.u8()? {
        0 => TargetModel::Linear(read_linear(r)?),
        1 => {
            let threshold = r.f64()?;
            TargetModel::ZeroInflated(ZeroInflatedModel {
                threshold,
                gate: read_linear(r)?,
                counter: read_linear(r)?,
            })
        }
        k => return Err(Error::Format(format!("unknown target model kind {k}"))),
    };
    Ok((name, model))
}

impl ModelBundle {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.pipeline;
        let mut out = Writer::default();
        out.buf.extend_from_slice(MAGIC);
        out.buf.extend_from_slice(&FORMAT_MAJOR.to_le_bytes());
        out.buf.extend_from_slice(&FORMAT_MINOR.to_le_bytes());

        let mut s = Writer::default();
        write_featurizer(&mut s, &p.featurizer);
        out.section(TAG_FEAT, s);
        for (name, m) in p.targets.iter().zip(&p.models) {
            let mut s = Writer::default();
            write_target_model(&mut s, name, m);
            out.section(TAG_MODL, s);
        }
        if let Some(stage) = &p.a11 {
            let mut s = Writer::default();
            s.u64(stage.targets.len() as u64);
            stage.targets.iter().for_each(|t| s.str(t));
            write_featurizer(&mut s, &stage.featurizer);
            stage.models.iter().for_each(|m| write_linear(&mut s, m));
            out.section(TAG_A11S, s);
        }
        let prov = &self.provenance;
        let mut s = Writer::default();
        s.str(&prov.config);
        s.u64(prov.seed);
        s.u64(prov.rows);
        s.str(&prov.corpus_sha256);
        s.str(&prov.tool_version);
        out.section(TAG_PROV, s);
        out.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(MAGIC.len()).ok() != Some(&MAGIC[..]) {
            return Err(Error::Format("not a model bundle (bad magic)".into()));
        }
        let (major, minor) = (r.u16()?, r.u16()?);
        if major != FORMAT_MAJOR {
            return Err(Error::Format(format!(
                "bundle format version {major}.{minor} is incompatible with {FORMAT_MAJOR}.{FORMAT_MINOR}"
            )));
        }
        let mut featurizer = None;
        let mut targets = Vec::new();
        let mut models = Vec::new();
        let mut a11 = None;
        let mut provenance = None;
        while r.pos < bytes.len() {
            let tag: [u8; 4] = r.array()?;
            let len = r.usize()?;
            let mut s = Reader::new(r.take(len)?);
            match &tag {
                TAG_FEAT => featurizer = Some(read_featurizer(&mut s)?),
                TAG_MODL => {
                    let (name, m) = read_target_model(&mut s)?;
                    targets.push(name);
                    models.push(m);
                }
                TAG_A11S => {
                    let n = s.count(8)?;
                    let names = (0..n).map(|_| s.str()).collect::<Result<Vec<_>>>()?;
                    let f = read_featurizer(&mut s)?;
                    let ms = (0..n).map(|_| read_linear(&mut s)).collect::<Result<Vec<_>>>()?;
                    a11 = Some(A11Stage {
                        targets: names,
                        featurizer: f,
                        models: ms,
                    });
                }
                TAG_PROV => {
                    provenance = Some(Provenance {
                        config: s.str()?,
                        seed: s.u64()?,
                        rows: s.u64()?,
                        corpus_sha256: s.str()?,
                        tool_version: s.str()?,
                    })
                }
                _ => {
                    log::debug!("skipping unknown bundle section {:?}", String::from_utf8_lossy(&tag));
                    continue;
                }
            }
            s.done()?;
        }
        let pipeline = Pipeline {
            targets,
            featurizer: featurizer.ok_or_else(|| Error::Format("bundle has no featurizer section".into()))?,
            models,
            a11,
        };
        if pipeline.models.is_empty() {
            return Err(Error::Format("bundle has no model sections".into()));
        }
        pipeline.validate().map_err(|e| Error::Format(e.to_string()))?;
        Ok(ModelBundle {
            pipeline,
            provenance: provenance.ok_or_else(|| Error::Format("bundle has no provenance section".into()))?,
        })
    }

    /// Writes the bundle atomically.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        atomic_write(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&read_file(path.as_ref())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Document, TargetVector};
    use crate::regressors::{fit_target, FitOptions, ModelFamily};

    fn bundle(family: ModelFamily) -> ModelBundle {
        let texts = ["the cat sat", "a dog ran", "the dog sat down", "cats and dogs", "nothing here"];
        let docs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document {
                id: format!("d{i}"),
                text: t.to_string(),
                gender: Some((i % 2) as u8),
                social_class: Some(i as u32 % 3),
            })
            .collect();
        let y = vec![0, 3, 1, 0, 2];
        let targets = y.iter().map(|&v| TargetVector(vec![Some(v)])).collect();
        let corpus = Corpus::new(docs, targets, vec!["t".into()]).unwrap();
        let config = FeaturizerConfig { min_df: 1, ..Default::default() };
        let featurizer = FeaturizerModel::fit(&corpus, &config).unwrap();
        let x = featurizer.transform(&corpus, None).unwrap();
        let model = fit_target(&x, &y, family, &FitOptions::default()).unwrap();
        ModelBundle {
            pipeline: Pipeline {
                targets: vec!["t".into()],
                featurizer,
                models: vec![model],
                a11: None,
            },
            provenance: Provenance {
                config: "model.family = ridge\n".into(),
                seed: 7,
                rows: 5,
                corpus_sha256: sha256_hex(b"x"),
                tool_version: "0.1.0".into(),
            },
        }
    }

    #[test]
    fn round_trip_is_exact() {
        for family in [ModelFamily::Ridge, ModelFamily::Svr, ModelFamily::ZeroInflated(crate::regressors::CounterFamily::Ridge)] {
            let b = bundle(family);
            let bytes = b.to_bytes();
            let back = ModelBundle::from_bytes(&bytes).unwrap();
            assert_eq!(back, b);
            assert_eq!(back.to_bytes(), bytes);
        }
    }

    #[test]
    fn sparse_weights_keep_negative_zero() {
        let v = vec![0.0, -0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.5];
        let mut w = Writer::default();
        write_weights(&mut w, &v);
        assert_eq!(w.buf[8], 1);
        let back = read_weights(&mut Reader::new(&w.buf)).unwrap();
        assert!(back.iter().zip(&v).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn refuses_other_major_and_garbage() {
        let mut bytes = bundle(ModelFamily::Ridge).to_bytes();
        assert!(ModelBundle::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        bytes[8] = 2;
        let err = ModelBundle::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("incompatible"), "{err}");
        assert!(ModelBundle::from_bytes(b"hello").is_err());
    }

    #[test]
    fn unknown_sections_are_skipped() {
        let b = bundle(ModelFamily::Ridge);
        let mut bytes = b.to_bytes();
        let mut extra = Writer::default();
        extra.section(b"XTRA", Writer { buf: vec![1, 2, 3] });
        bytes.extend_from_slice(&extra.buf);
        assert_eq!(ModelBundle::from_bytes(&bytes).unwrap(), b);
    }
}
