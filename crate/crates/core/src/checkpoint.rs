//! Versioned binary checkpoints for trained models and shadow attacks.
//!
//! Layout: the magic bytes `INFA1`, a one-byte artifact kind, then
//! little-endian dimensions followed by row-major 64-bit-float weight
//! blocks (per layer: weights, then biases).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::attack::ShadowAttackModel;
use crate::error::{Error, Result};
use crate::model::{Activation, TrainedModel};
use crate::nn::{Layer, Network, OutputKind};
use crate::space::{DomainKind, FeatureDomain};

pub const MAGIC: &[u8; 5] = b"INFA1";

const KIND_CLASSIFIER: u8 = 0;
const KIND_SHADOW_ATTACK: u8 = 1;

fn write_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn activation_tag(a: Activation) -> u8 {
    match a {
        Activation::Tanh => 0,
        Activation::Relu => 1,
    }
}

fn activation_from(tag: u8) -> Result<Activation> {
    match tag {
        0 => Ok(Activation::Tanh),
        1 => Ok(Activation::Relu),
        other => Err(Error::Checkpoint(format!("unknown activation tag {other}"))),
    }
}

fn output_tag(o: OutputKind) -> u8 {
    match o {
        OutputKind::Softmax => 0,
        OutputKind::Sigmoid => 1,
    }
}

fn output_from(tag: u8) -> Result<OutputKind> {
    match tag {
        0 => Ok(OutputKind::Softmax),
        1 => Ok(OutputKind::Sigmoid),
        other => Err(Error::Checkpoint(format!("unknown output tag {other}"))),
    }
}

fn write_network(w: &mut impl Write, net: &Network) -> Result<()> {
    w.write_all(&[activation_tag(net.activation), output_tag(net.output)])?;
    write_u32(w, net.layers.len() as u32)?;
    for layer in &net.layers {
        write_u32(w, layer.out_dim as u32)?;
        write_u32(w, layer.in_dim as u32)?;
        for &v in &layer.weights {
            write_f64(w, v)?;
        }
        for &v in &layer.biases {
            write_f64(w, v)?;
        }
    }
    Ok(())
}

fn read_network(r: &mut impl Read) -> Result<Network> {
    let activation = activation_from(read_u8(r)?)?;
    let output = output_from(read_u8(r)?)?;
    let n_layers = read_u32(r)? as usize;
    if n_layers == 0 {
        return Err(Error::Checkpoint("network with no layers".into()));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let out_dim = read_u32(r)? as usize;
        let in_dim = read_u32(r)? as usize;
        if out_dim == 0 || in_dim == 0 {
            return Err(Error::Checkpoint("zero layer dimension".into()));
        }
        let mut weights = vec![0.0; out_dim * in_dim];
        for v in &mut weights {
            *v = read_f64(r)?;
        }
        let mut biases = vec![0.0; out_dim];
        for v in &mut biases {
            *v = read_f64(r)?;
        }
        layers.push(Layer {
            in_dim,
            out_dim,
            weights,
            biases,
        });
    }
    Ok(Network {
        layers,
        activation,
        output,
    })
}

/// Serialize a trained classifier.
pub fn write_model(w: &mut impl Write, model: &TrainedModel) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[KIND_CLASSIFIER])?;
    let kind = match model.domain().kind() {
        DomainKind::Binary => 0u8,
        DomainKind::Continuous => 1u8,
    };
    w.write_all(&[kind])?;
    write_u32(w, model.domain().dimension() as u32)?;
    write_u32(w, model.n_classes() as u32)?;
    write_f64(w, model.train_loss_mean())?;
    write_network(w, &model.net)
}

/// Deserialize a trained classifier.
pub fn read_model(r: &mut impl Read) -> Result<TrainedModel> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    if read_u8(r)? != KIND_CLASSIFIER {
        return Err(Error::Checkpoint("not a classifier checkpoint".into()));
    }
    let domain_kind = match read_u8(r)? {
        0 => DomainKind::Binary,
        1 => DomainKind::Continuous,
        other => return Err(Error::Checkpoint(format!("unknown domain tag {other}"))),
    };
    let dimension = read_u32(r)? as usize;
    let n_classes = read_u32(r)? as usize;
    let train_loss_mean = read_f64(r)?;
    let net = read_network(r)?;
    if net.output != OutputKind::Softmax {
        return Err(Error::Checkpoint("classifier must have softmax output".into()));
    }
    if net.input_dim() != dimension || net.output_dim() != n_classes {
        return Err(Error::Checkpoint("network shape disagrees with header".into()));
    }
    let domain = FeatureDomain::new(domain_kind, dimension)?;
    let hidden: Vec<usize> = net.layers[..net.layers.len() - 1]
        .iter()
        .map(|l| l.out_dim)
        .collect();
    let mut model = TrainedModel::from_parts(
        domain,
        n_classes,
        &hidden,
        net.activation,
        &net.parameters(),
        train_loss_mean,
    )?;
    model.set_train_loss_mean(train_loss_mean);
    Ok(model)
}

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(&mut w, model)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let mut r = BufReader::new(File::open(path)?);
    read_model(&mut r)
}

/// Serialize a shadow attack model (same container format).
pub fn write_attack(w: &mut impl Write, attack: &ShadowAttackModel) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[KIND_SHADOW_ATTACK])?;
    write_u32(w, attack.n_classes() as u32)?;
    write_u32(w, attack.n_shadows() as u32)?;
    use crate::attack::AttackHeads;
    match &attack.heads {
        AttackHeads::Shared(net) => {
            w.write_all(&[0u8])?;
            write_u32(w, 1)?;
            write_network(w, net)
        }
        AttackHeads::PerClass(nets) => {
            w.write_all(&[1u8])?;
            write_u32(w, nets.len() as u32)?;
            for net in nets {
                write_network(w, net)?;
            }
            Ok(())
        }
    }
}

/// Deserialize a shadow attack model.
pub fn read_attack(r: &mut impl Read) -> Result<ShadowAttackModel> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    if read_u8(r)? != KIND_SHADOW_ATTACK {
        return Err(Error::Checkpoint("not a shadow-attack checkpoint".into()));
    }
    let n_classes = read_u32(r)? as usize;
    let n_shadows = read_u32(r)? as usize;
    let mode = read_u8(r)?;
    let n_heads = read_u32(r)? as usize;
    use crate::attack::AttackHeads;
    let heads = match mode {
        0 => {
            if n_heads != 1 {
                return Err(Error::Checkpoint("shared attack must have one head".into()));
            }
            AttackHeads::Shared(read_network(r)?)
        }
        1 => {
            if n_heads != n_classes {
                return Err(Error::Checkpoint(
                    "per-class attack needs one head per class".into(),
                ));
            }
            let mut nets = Vec::with_capacity(n_heads);
            for _ in 0..n_heads {
                nets.push(read_network(r)?);
            }
            AttackHeads::PerClass(nets)
        }
        other => return Err(Error::Checkpoint(format!("unknown head mode {other}"))),
    };
    Ok(ShadowAttackModel {
        n_classes,
        n_shadows,
        heads,
    })
}

pub fn save_attack(path: &Path, attack: &ShadowAttackModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_attack(&mut w, attack)?;
    w.flush()?;
    Ok(())
}

pub fn load_attack(path: &Path) -> Result<ShadowAttackModel> {
    let mut r = BufReader::new(File::open(path)?);
    read_attack(&mut r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_dataset, SynthKind};
    use crate::model::{train_mlp, MlpConfig};

    #[test]
    fn model_round_trips_bit_exactly() {
        let ds = synth_dataset(SynthKind::BinaryClusters, 20, 60, 3, 0.3, 101).unwrap();
        let cfg = MlpConfig {
            hidden_layers: vec![10],
            epochs: 5,
            ..Default::default()
        };
        let (model, _) = train_mlp(&ds, 3, &cfg).unwrap();
        let mut buf = Vec::new();
        write_model(&mut buf, &model).unwrap();
        assert_eq!(&buf[..5], MAGIC);
        let back = read_model(&mut buf.as_slice()).unwrap();
        assert_eq!(model.parameters(), back.parameters());
        assert_eq!(model.train_loss_mean(), back.train_loss_mean());
        assert_eq!(model.n_classes(), back.n_classes());
        let x = ds.get(0);
        assert_eq!(
            model.predict_proba(x).unwrap(),
            back.predict_proba(x).unwrap()
        );
    }

    #[test]
    fn attack_round_trips() {
        let ds = synth_dataset(SynthKind::BinaryClusters, 16, 160, 2, 0.3, 103).unwrap();
        let target_cfg = MlpConfig {
            hidden_layers: vec![6],
            epochs: 10,
            ..Default::default()
        };
        let attack_cfg = MlpConfig {
            hidden_layers: vec![8],
            epochs: 5,
            ..Default::default()
        };
        let attack =
            crate::attack::train_shadow_attack(&ds, 2, &target_cfg, &attack_cfg, 5).unwrap();
        let mut buf = Vec::new();
        write_attack(&mut buf, &attack).unwrap();
        let back = read_attack(&mut buf.as_slice()).unwrap();
        let confs = vec![0.7, 0.3];
        assert_eq!(
            attack.membership_probability(&confs, 1).unwrap(),
            back.membership_probability(&confs, 1).unwrap()
        );
    }

    #[test]
    fn corrupt_magic_is_rejected() {
        let buf = b"WRONGx".to_vec();
        assert!(matches!(
            read_model(&mut buf.as_slice()),
            Err(Error::Checkpoint(_))
        ));
    }
}
