//! Particle files: UTF-8 CSV with header `id,x,y,z`, one particle per line.
//! Ids must run `0..N` in order.

use std::io::{Read, Write};

use raypair_core::Vec3;

use crate::{BenchError, Result};

pub const PARTICLE_HEADER: [&str; 4] = ["id", "x", "y", "z"];

pub fn write_particles<W: Write>(out: W, positions: &[Vec3]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PARTICLE_HEADER)?;
    for (i, p) in positions.iter().enumerate() {
        // `{}` on f32 prints the shortest string that parses back exactly
        w.write_record([i.to_string(), p.x.to_string(), p.y.to_string(), p.z.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_particles<R: Read>(input: R) -> Result<Vec<Vec3>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(PARTICLE_HEADER) {
        return Err(BenchError::Format(format!("expected header id,x,y,z, got {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| -> Result<&str> {
            rec.get(k).ok_or_else(|| BenchError::Format(format!("record {line}: missing field {}", PARTICLE_HEADER[k])))
        };
        let id: usize = field(0)?
            .parse()
            .map_err(|e| BenchError::Format(format!("record {line}: bad id: {e}")))?;
        if id != out.len() {
            return Err(BenchError::Format(format!("record {line}: id {id} out of order")));
        }
        let mut c = [0f32; 3];
        for (k, v) in c.iter_mut().enumerate() {
            *v = field(k + 1)?
                .parse()
                .map_err(|e| BenchError::Format(format!("record {line}: bad {}: {e}", PARTICLE_HEADER[k + 1])))?;
        }
        out.push(Vec3::from(c));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let pts = vec![Vec3::new(0.1, -2.5e-8, 1.0), Vec3::new(f32::MIN_POSITIVE, 0.333_333_34, -0.0)];
        let mut buf = Vec::new();
        write_particles(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,x,y,z\n0,0.1,"));
        let back = read_particles(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in back.iter().zip(&pts) {
            assert_eq!(a.to_array().map(f32::to_bits), b.to_array().map(f32::to_bits));
        }
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(read_particles("a,b,c,d\n".as_bytes()).is_err());
        assert!(read_particles("id,x,y,z\n1,0,0,0\n".as_bytes()).is_err());
        assert!(read_particles("id,x,y,z\n0,0,zero,0\n".as_bytes()).is_err());
        assert!(read_particles("id,x,y,z\n0,0,0\n".as_bytes()).is_err());
        assert_eq!(read_particles("id,x,y,z\n".as_bytes()).unwrap(), vec![]);
    }
}
