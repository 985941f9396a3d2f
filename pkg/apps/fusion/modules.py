"""
Trip-Aware Transformer: эмбеддинг точек всех проездов -> энкодер (общая память)
-> иерархический декодер (instance × point запросы) + сегментационная ветка.
"""
import logging
import math

import torch
import torch.nn.functional as F
from torch import nn

from apps.fusion.models import LayerOutput, ModelConfig, ModelOutput, TokenBatch
from crowdmap.exceptions import CapacityError

logger = logging.getLogger(__name__)

# точки держатся строго внутри (0, 1): float32-сигмоида насыщается до 1.0 уже при x ≈ 17
POINT_EPS = 1e-6


def sinusoidal(coords: torch.Tensor, n_frequencies: int) -> torch.Tensor:
    """(..., 2) -> (..., 4L): sin/cos(2^l · π · x) и то же для y, l = 0..L-1."""
    freqs = (2.0 ** torch.arange(n_frequencies, dtype=coords.dtype, device=coords.device)) * math.pi
    angles = coords.unsqueeze(-1) * freqs  # (..., 2, L)
    return torch.cat([angles.sin(), angles.cos()], dim=-1).flatten(-2)


def _mlp(in_dim: int, hidden: int, out_dim: int) -> nn.Sequential:
    return nn.Sequential(nn.Linear(in_dim, hidden), nn.GELU(), nn.Linear(hidden, out_dim))


class _FeedForward(nn.Module):
    def __init__(self, d_model: int, ffn_dim: int, dropout: float):
        super().__init__()
        self.linear1 = nn.Linear(d_model, ffn_dim)
        self.linear2 = nn.Linear(ffn_dim, d_model)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x):
        return self.linear2(self.dropout(F.gelu(self.linear1(x))))


# ---------- эмбеддинг токенов ----------

class TokenEmbedding(nn.Module):
    """
    Токен точки = MLP(concat[MLP(one-hot категории), sin/cos(x, y),
    эмбеддинг индекса проезда, эмбеддинг индекса элемента]).
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        d = config.d_model
        self.config = config
        self.category_mlp = _mlp(config.n_categories, d, d)
        in_dim = d + 4 * config.n_frequencies
        if config.use_trip_embedding:
            self.trip_embedding = nn.Embedding(config.max_trips, d)
            self.element_embedding = nn.Embedding(config.max_elements, d)
            in_dim += 2 * d
        self.projection = _mlp(in_dim, d, d)

    def forward(self, coords: torch.Tensor, categories: torch.Tensor, mask: torch.Tensor) -> TokenBatch:
        batch, n_trips, n_elements, n_points = mask.shape
        if n_trips > self.config.max_trips or n_elements > self.config.max_elements:
            raise CapacityError("Сцена превышает ёмкость модели",
                                {"trips": n_trips, "max_trips": self.config.max_trips,
                                 "elements": n_elements, "max_elements": self.config.max_elements})

        one_hot = F.one_hot(categories, self.config.n_categories).to(coords.dtype)
        parts = [self.category_mlp(one_hot), sinusoidal(coords, self.config.n_frequencies)]
        if self.config.use_trip_embedding:
            trip_ids = torch.arange(n_trips, device=coords.device)
            element_ids = torch.arange(n_elements, device=coords.device)
            shape = (batch, n_trips, n_elements, n_points, self.config.d_model)
            parts.append(self.trip_embedding(trip_ids)[None, :, None, None].expand(shape))
            parts.append(self.element_embedding(element_ids)[None, None, :, None].expand(shape))

        features = self.projection(torch.cat(parts, dim=-1)) * mask.unsqueeze(-1).to(coords.dtype)
        return TokenBatch(features.reshape(batch, -1, self.config.d_model), mask.reshape(batch, -1))


# ---------- слои ----------

class EncoderLayer(nn.Module):
    """Post-norm: self-attn -> add&norm -> FFN -> add&norm."""

    def __init__(self, d_model: int, n_heads: int, ffn_dim: int, dropout: float):
        super().__init__()
        self.self_attn = nn.MultiheadAttention(d_model, n_heads, dropout=dropout, batch_first=True)
        self.ffn = _FeedForward(d_model, ffn_dim, dropout)
        self.norm1 = nn.LayerNorm(d_model)
        self.norm2 = nn.LayerNorm(d_model)
        self.dropout1 = nn.Dropout(dropout)
        self.dropout2 = nn.Dropout(dropout)

    def forward(self, src: torch.Tensor, padding_mask: torch.Tensor) -> torch.Tensor:
        # padding_mask: True — ключ игнорируется
        attended = self.self_attn(src, src, src, key_padding_mask=padding_mask, need_weights=False)[0]
        src = self.norm1(src + self.dropout1(attended))
        return self.norm2(src + self.dropout2(self.ffn(src)))


class DecoderLayer(nn.Module):
    """
    global self-attn по всем N_inst·N_p запросам -> cross-attn к памяти
    -> self-attn внутри экземпляра (N_p запросов) -> FFN; везде add&norm.
    """

    def __init__(self, d_model: int, n_heads: int, ffn_dim: int, dropout: float):
        super().__init__()
        self.self_attn = nn.MultiheadAttention(d_model, n_heads, dropout=dropout, batch_first=True)
        self.cross_attn = nn.MultiheadAttention(d_model, n_heads, dropout=dropout, batch_first=True)
        self.intra_attn = nn.MultiheadAttention(d_model, n_heads, dropout=dropout, batch_first=True)
        self.ffn = _FeedForward(d_model, ffn_dim, dropout)
        self.norm1 = nn.LayerNorm(d_model)
        self.norm2 = nn.LayerNorm(d_model)
        self.norm3 = nn.LayerNorm(d_model)
        self.norm4 = nn.LayerNorm(d_model)
        self.dropout = nn.Dropout(dropout)

    def forward(self, queries: torch.Tensor, memory: torch.Tensor, memory_padding: torch.Tensor,
                n_instances: int, n_points: int) -> torch.Tensor:
        batch, _, d = queries.shape
        x = self.norm1(queries + self.dropout(self.self_attn(queries, queries, queries, need_weights=False)[0]))
        cross = self.cross_attn(x, memory, memory, key_padding_mask=memory_padding, need_weights=False)[0]
        x = self.norm2(x + self.dropout(cross))

        local = x.reshape(batch * n_instances, n_points, d)
        local = self.intra_attn(local, local, local, need_weights=False)[0]
        x = self.norm3(x + self.dropout(local.reshape(batch, n_instances * n_points, d)))
        return self.norm4(x + self.dropout(self.ffn(x)))


class SegmentationBranch(nn.Module):
    """По одному обучаемому запросу на ячейку H×W; cross-attn к памяти -> MLP -> логит."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        d = config.d_model
        self.height, self.width = config.seg_height, config.seg_width
        self.queries = nn.Embedding(self.height * self.width, d)
        self.cross_attn = nn.MultiheadAttention(d, config.n_heads, dropout=config.dropout, batch_first=True)
        self.norm = nn.LayerNorm(d)
        self.head = _mlp(d, d, 1)

    def forward(self, memory: torch.Tensor, memory_padding: torch.Tensor) -> torch.Tensor:
        batch = memory.shape[0]
        queries = self.queries.weight.unsqueeze(0).expand(batch, -1, -1)
        attended = self.cross_attn(queries, memory, memory, key_padding_mask=memory_padding, need_weights=False)[0]
        logits = self.head(self.norm(queries + attended)).squeeze(-1)
        return logits.reshape(batch, self.height, self.width)


# ---------- модель ----------

class TripAwareTransformer(nn.Module):

    def __init__(self, config: ModelConfig):
        super().__init__()
        d = config.d_model
        self.config = config
        self.embedding = TokenEmbedding(config)
        # всегда валидный «пустой» токен памяти: полностью замаскированная сцена остаётся определённой
        self.null_token = nn.Parameter(torch.zeros(1, 1, d))
        self.encoder_layers = nn.ModuleList(
            EncoderLayer(d, config.n_heads, config.ffn_dim, config.dropout)
            for _ in range(config.n_encoder_layers)
        )
        self.instance_embedding = nn.Embedding(config.n_instance_queries, d)
        # общие для всех экземпляров
        self.point_embedding = nn.Embedding(config.n_point_queries, d)
        self.decoder_layers = nn.ModuleList(
            DecoderLayer(d, config.n_heads, config.ffn_dim, config.dropout)
            for _ in range(config.n_decoder_layers)
        )
        self.class_head = nn.Linear(d, config.n_outputs)
        self.point_head = _mlp(d, d, 2)
        self.segmentation = SegmentationBranch(config) if config.use_seg_branch else None
        nn.init.normal_(self.null_token, std=0.02)

    def _with_null(self, features: torch.Tensor, mask: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Добавляем null-токен в начало; возвращаем (features, padding_mask)."""
        batch = features.shape[0]
        null = self.null_token.to(features.dtype).expand(batch, -1, -1)
        valid = torch.ones(batch, 1, dtype=torch.bool, device=mask.device)
        return torch.cat([null, features], dim=1), ~torch.cat([valid, mask], dim=1)

    def embed_tokens(self, coords, categories, mask) -> TokenBatch:
        return self.embedding(coords, categories, mask)

    def encode(self, tokens: TokenBatch) -> torch.Tensor:
        """(B, T, d) -> (B, T, d); замаскированные позиции на выходе — нули."""
        if not self.encoder_layers:
            return tokens.features
        x, padding = self._with_null(tokens.features, tokens.mask)
        for layer in self.encoder_layers:
            x = layer(x, padding)
        return x[:, 1:] * tokens.mask.unsqueeze(-1).to(x.dtype)

    def _heads(self, queries: torch.Tensor) -> LayerOutput:
        batch = queries.shape[0]
        grid = queries.reshape(batch, self.config.n_instance_queries, self.config.n_point_queries, -1)
        return LayerOutput(
            class_logits=self.class_head(grid.mean(dim=2)),
            points=torch.sigmoid(self.point_head(grid)).clamp(POINT_EPS, 1.0 - POINT_EPS),
        )

    def decode(self, memory: torch.Tensor, mask: torch.Tensor) -> ModelOutput:
        cfg = self.config
        batch = memory.shape[0]
        memory, padding = self._with_null(memory, mask)

        queries = (self.instance_embedding.weight[:, None, :] + self.point_embedding.weight[None, :, :])
        queries = queries.reshape(1, -1, cfg.d_model).to(memory.dtype).expand(batch, -1, -1)

        aux = []
        for layer in self.decoder_layers:
            queries = layer(queries, memory, padding, cfg.n_instance_queries, cfg.n_point_queries)
            aux.append(self._heads(queries))

        if self.segmentation is not None:
            seg_logits = self.segmentation(memory, padding)
        else:
            seg_logits = memory.new_zeros(batch, cfg.seg_height, cfg.seg_width)

        final = aux[-1]
        return ModelOutput(final.class_logits, final.points, seg_logits, aux, has_seg=self.segmentation is not None)

    def forward(self, coords: torch.Tensor, categories: torch.Tensor, mask: torch.Tensor) -> ModelOutput:
        tokens = self.embed_tokens(coords, categories, mask)
        return self.decode(self.encode(tokens), tokens.mask)
